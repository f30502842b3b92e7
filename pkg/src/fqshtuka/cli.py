"""Batch driver: read a JSON problem document, run its commands, emit a report.

Exit codes: 0 when every command succeeded, 1 when some command failed,
2 when the document could not be parsed or validated.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from . import algebra as alg
from . import anderson as an
from . import drinfeld as dr
from . import field as fl
from . import hopf
from . import shtuka as shm
from . import suite
from .errors import InvalidAlgebra, SchemaError, ShtukaError, UnresolvedReference
from .expr import evaluate, evaluate_element
from .shtuka import FiniteShtuka, LocalShtuka
from .zseries import ZMatrix, ZSeries, divide_by_z_minus_zeta

DOCUMENT_SCHEMA = "fqshtuka-document/1"
REPORT_SCHEMA = "fqshtuka-report/1"
ENV_PREFIX = "FQSHTUKA_"
DEFAULTS = {"precision": 12, "dmax": 8, "emax": 16, "seed": suite.DEFAULT_SEED}
OPTION_TYPES = {"precision": int, "dmax": int, "emax": int, "seed": int}


def _plain(x):
    """JSON-compatible copy: numpy scalars and arrays become ints and lists,
    dict keys become strings."""
    return json.loads(json.dumps(x, default=_json_default, sort_keys=True))


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "as_dict"):
        return o.as_dict()
    return repr(o)


# -- documents --------------------------------------------------------------------

class ProblemDocument:
    def __init__(self, ring, objects, commands, options, raw):
        self.ring = ring
        self.objects = objects
        self.commands = commands
        self.options = options
        self.raw = raw

    def __repr__(self):
        return f"ProblemDocument({len(self.objects)} objects, {len(self.commands)} commands)"


class Report:
    def __init__(self, header, results, summary=None):
        self.header = header
        self.results = results
        self.summary = summary if summary is not None else _summarize(results)

    @property
    def failed(self):
        return self.summary.get("failed", 0)

    def to_dict(self):
        return {"schema": REPORT_SCHEMA, "header": self.header,
                "results": self.results, "summary": self.summary}

    def __eq__(self, other):
        return isinstance(other, Report) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return f"Report({len(self.results)} results, failed={self.failed})"


def _summarize(results):
    failed = sum(1 for r in results if r.get("status") != "ok")
    return {"commands": len(results), "failed": failed}


def _err(errors, where, msg):
    errors.append(f"{where}: {msg}")


RING_PRESETS = ("Fq", "Fq^m", "Fq[e]/e^n", "Fq[u,v]/(u^a,v^b,uv)", "Fq^m[e]/e^n")
OBJECT_KINDS = ("finite", "local", "deformation")
OPS = ("order", "points", "roundtrip", "decompose", "colie", "nilpotence",
       "verschiebung", "boundedness", "tower", "omega", "frobenius-kernel",
       "zd-verschiebung", "hodge", "deform", "sequence", "strictness",
       "balanced", "divide", "verify-suite")
NEEDS_OBJECT = {"order", "points", "roundtrip", "decompose", "colie", "nilpotence",
                "verschiebung", "boundedness", "tower", "omega", "frobenius-kernel",
                "zd-verschiebung", "hodge", "deform", "sequence"}


def _check_ring(spec, where, errors):
    if not isinstance(spec, dict):
        _err(errors, where, "ring must be an object")
        return
    if "q" not in spec or not isinstance(spec["q"], int):
        _err(errors, where + ".q", "integer field size required")
    if "preset" in spec:
        if spec["preset"] not in RING_PRESETS:
            _err(errors, where + ".preset", f"unknown preset {spec['preset']!r}")
    elif "structure" not in spec:
        _err(errors, where, "either 'preset' or 'structure' is required")


def parse(text):
    """Parse a problem document or a structured report.

    Raises SchemaError (with the list of located errors as witness),
    UnresolvedReference, or SyntaxError for malformed JSON.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SyntaxError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise SchemaError("document must be a JSON object", witness=["$: not an object"])
    if raw.get("schema") == REPORT_SCHEMA:
        return Report(raw.get("header", {}), raw.get("results", []), raw.get("summary"))
    errors = []
    if raw.get("schema", DOCUMENT_SCHEMA) != DOCUMENT_SCHEMA:
        _err(errors, "$.schema", f"expected {DOCUMENT_SCHEMA!r}")
    commands = raw.get("commands", [])
    objects = raw.get("objects", {})
    options = raw.get("options", {})
    if not isinstance(objects, dict):
        _err(errors, "$.objects", "must be an object")
        objects = {}
    if not isinstance(commands, list):
        _err(errors, "$.commands", "must be a list")
        commands = []
    if not isinstance(options, dict):
        _err(errors, "$.options", "must be an object")
        options = {}
    needs_ring = bool(objects) or any(isinstance(c, dict) and c.get("op") in NEEDS_OBJECT
                                      for c in commands)
    if "ring" in raw:
        _check_ring(raw["ring"], "$.ring", errors)
    elif needs_ring:
        _err(errors, "$.ring", "missing")
    for key, val in options.items():
        if key not in OPTION_TYPES:
            _err(errors, f"$.options.{key}", "unknown option")
        elif not isinstance(val, int):
            _err(errors, f"$.options.{key}", "must be an integer")
    for name, obj in objects.items():
        where = f"$.objects.{name}"
        if not isinstance(obj, dict) or obj.get("kind") not in OBJECT_KINDS:
            _err(errors, where + ".kind", f"must be one of {list(OBJECT_KINDS)}")
            continue
        if obj["kind"] in ("finite", "local"):
            m = obj.get("matrix")
            if not (isinstance(m, list) and m and all(isinstance(r, list) and len(r) == len(m) for r in m)):
                _err(errors, where + ".matrix", "must be a non-empty square list of lists")
        else:
            for key in ("big_ring", "ideal", "small", "fil", "d"):
                if key not in obj:
                    _err(errors, f"{where}.{key}", "missing")
            if "big_ring" in obj:
                _check_ring(obj["big_ring"], where + ".big_ring", errors)
    for i, cmd in enumerate(commands):
        where = f"$.commands[{i}]"
        if not isinstance(cmd, dict) or cmd.get("op") not in OPS:
            _err(errors, where + ".op", f"unknown operation {cmd.get('op') if isinstance(cmd, dict) else cmd!r}")
    if errors:
        raise SchemaError(f"{len(errors)} schema error(s): " + "; ".join(errors), witness=errors)
    # references
    for name, obj in objects.items():
        if obj["kind"] == "deformation" and obj["small"] not in objects:
            raise UnresolvedReference(f"$.objects.{name}.small: unknown object {obj['small']!r}",
                                      witness=obj["small"])
    for i, cmd in enumerate(commands):
        if cmd["op"] in NEEDS_OBJECT:
            ref = cmd.get("object")
            if ref not in objects:
                raise UnresolvedReference(f"$.commands[{i}].object: unknown object {ref!r}",
                                          witness=ref)
    return ProblemDocument(raw.get("ring"), objects, commands, options, raw)


# -- building rings and objects ----------------------------------------------------

def build_ring(spec):
    """FdAlgebra from a ring specification; raises InvalidAlgebra on a bad
    zeta or structure."""
    F = fl.field_for(int(spec["q"]))
    zeta = spec.get("zeta")
    if "structure" in spec:
        C = np.array(spec["structure"], dtype=np.int64)
        A = alg.FdAlgebra(F, C, spec.get("names"), check=False)
        alg.validate_or_raise(A)
    else:
        preset = spec["preset"]
        if preset == "Fq":
            A = alg.base_algebra(F)
        elif preset == "Fq^m":
            A = alg.finite_field_algebra(F, int(spec.get("m", 1)))
        elif preset == "Fq[e]/e^n":
            A = alg.truncated_polynomial(F, int(spec.get("n", 2)), spec.get("var", "e"))
        elif preset == "Fq[u,v]/(u^a,v^b,uv)":
            A = alg.bivariate_truncated(F, int(spec.get("a", 2)), int(spec.get("b", 2)))
        else:
            L = alg.finite_field_algebra(F, int(spec.get("m", 2)))
            E = alg.truncated_polynomial(F, int(spec.get("n", 2)), spec.get("var", "e"))
            A, _, _ = alg.tensor(L, E)
            A.zeta = A.zero()
    if zeta not in (None, "0", 0):
        A = alg.with_zeta(A, evaluate_element(str(zeta), A))
    return A


def _matrix_of_elements(A, rows):
    r = len(rows)
    out = np.zeros((r, r, A.k), dtype=np.int64)
    for i, row in enumerate(rows):
        for j, e in enumerate(row):
            out[i, j] = evaluate_element(str(e), A)
    return out


def _series_matrix(A, rows, N):
    return ZMatrix.from_entries(A, [[evaluate(str(e), A, N) for e in row] for row in rows])


class Context:
    def __init__(self, doc, options):
        self.doc = doc
        self.options = options
        self.ring = build_ring(doc.ring) if doc.ring else None
        self._objects = {}

    def obj(self, name):
        if name not in self._objects:
            self._objects[name] = self._build(name, self.doc.objects[name])
        return self._objects[name]

    def _build(self, name, spec):
        A = self.ring
        kind = spec["kind"]
        if kind == "finite":
            return FiniteShtuka(A, _matrix_of_elements(A, spec["matrix"]))
        if kind == "local":
            N = int(spec.get("precision", self.options["precision"]))
            return LocalShtuka(A, _series_matrix(A, spec["matrix"], N),
                               int(spec.get("twist", 0)), e_max=self.options["emax"])
        big = build_ring(spec["big_ring"])
        small = self.obj(spec["small"])
        d = int(spec["d"])
        ideal = [evaluate_element(str(x), big) for x in spec["ideal"]]
        gens = []
        for g in spec["fil"]:
            vec = np.zeros((len(g), d, big.k), dtype=np.int64)
            for i, e in enumerate(g):
                s = evaluate(str(e), big, max(d + big.zeta_index, 1))
                vec[i] = an.reduce_mod_zeta_power(big, s.coeffs, d)
            gens.append(vec)
        gens = np.array(gens, dtype=np.int64).reshape(-1, small.rank, d, big.k)
        return an.DeformationProblem(big, ideal, small, gens, d)


def _test_algebra(A, name):
    for t in dr.catalog(A):
        if t.name == name:
            return t
    raise SchemaError(f"unknown test algebra {name!r}",
                      witness=[t.name for t in dr.catalog(A)])


def _fmt_matrix(A, M):
    return [[A.format(M[i, j]) for j in range(M.shape[1])] for i in range(M.shape[0])]


# -- operations -----------------------------------------------------------------

def _op_order(ctx, cmd):
    sh = ctx.obj(cmd["object"])
    if isinstance(sh, LocalShtuka):
        sh = shm.truncate(sh, int(cmd.get("level", 1))).as_finite()
    cert = dr.order(dr.presentation(sh))
    q = sh.algebra.q
    return {"order": cert.order, "expected": q ** sh.rank, "closed": cert.closed}


def _op_points(ctx, cmd):
    sh = ctx.obj(cmd["object"])
    if isinstance(sh, LocalShtuka):
        sh = shm.truncate(sh, int(cmd.get("level", 1)))
    names = cmd.get("tests") or [t.name for t in dr.catalog(sh.algebra)]
    return {"counts": {n: dr.points(sh, _test_algebra(sh.algebra, n)).count for n in names}}


def _op_roundtrip(ctx, cmd):
    sh = ctx.obj(cmd["object"])
    cert = hopf.mq_roundtrip(sh)
    return {"ok": cert.ok, "U": _fmt_matrix(sh.algebra, cert.U)}


def _op_decompose(ctx, cmd):
    sh = ctx.obj(cmd["object"])
    dec = shm.decompose_etale_nilpotent(sh)
    A = sh.algebra
    return {"etale_rank": dec.etale.rank, "nilpotent_rank": dec.nilpotent.rank,
            "splitting": _fmt_matrix(A, dec.splitting),
            "etale": _fmt_matrix(A, dec.etale.matrix),
            "nilpotent": _fmt_matrix(A, dec.nilpotent.matrix)}


def _op_colie(ctx, cmd):
    sh = ctx.obj(cmd["object"])
    if isinstance(sh, LocalShtuka):
        sh = shm.truncate(sh, int(cmd.get("level", 1))).as_finite()
    cl = shm.colie(sh)
    return {"omega_dim": cl.omega_dim, "n_dim": cl.kernel_dim}


def _op_nilpotence(ctx, cmd):
    return shm.nilpotence_checks(ctx.obj(cmd["object"])).as_dict()


def _op_verschiebung(ctx, cmd):
    sh = ctx.obj(cmd["object"])
    V = shm.verschiebung(sh, int(cmd["d"]))
    return {"d": int(cmd["d"]), "V": V.matrix.format(), "precision": V.precision}


def _op_boundedness(ctx, cmd):
    return shm.boundedness_check(ctx.obj(cmd["object"]), int(cmd["d"])).as_dict()


def _tower(ctx, cmd):
    return an.build_tower(ctx.obj(cmd["object"]), int(cmd.get("n_max", 2)),
                          d_max=ctx.options["dmax"])


def _op_tower(ctx, cmd):
    return _tower(ctx, cmd).as_dict()


def _op_omega(ctx, cmd):
    return an.omega_stabilization(_tower(ctx, cmd)).as_dict()


def _op_frobenius_kernel(ctx, cmd):
    sh = ctx.obj(cmd["object"])
    tower = an.build_tower(sh, 1, d_max=ctx.options["dmax"])
    names = cmd.get("tests") or [t.name for t in dr.catalog(sh.algebra)]
    i = int(cmd.get("i", 1))
    reps = [an.frobenius_kernel_check(tower, i, _test_algebra(sh.algebra, n)).as_dict()
            for n in names]
    return {"i": i, "d": tower.d, "checks": reps,
            "contained": all(r["contained"] for r in reps)}


def _op_zd(ctx, cmd):
    return an.zd_verschiebung_check(ctx.obj(cmd["object"]), int(cmd["d"])).as_dict()


def _op_hodge(ctx, cmd):
    return an.hodge_filtration(ctx.obj(cmd["object"]), int(cmd["d"])).as_dict()


def _op_deform(ctx, cmd):
    prob = ctx.obj(cmd["object"])
    lift = an.deform_lift(prob)
    eq = an.equivalence_check(prob)
    return {"lift": lift.shtuka.matrix.truncate(min(4, lift.shtuka.precision)).format(),
            "precision": lift.shtuka.precision, "reduces": lift.reduces,
            "hodge_matches": lift.hodge_ok, "equivalence": eq.as_dict()}


def _op_sequence(ctx, cmd):
    return shm.sequence_check(ctx.obj(cmd["object"]), int(cmd["n"]), int(cmd["m"])).as_dict()


_GROUPS = {"alpha_q": hopf.alpha_q, "alpha_p": hopf.alpha_p, "constant": hopf.constant_fq}


def _group_ring(ctx, cmd):
    if "q" in cmd:
        return alg.base_algebra(fl.field_for(int(cmd["q"])))
    if ctx.ring is None:
        raise SchemaError("strictness needs 'q' or a document ring")
    return ctx.ring


def _op_strictness(ctx, cmd):
    A = _group_ring(ctx, cmd)
    group = cmd.get("group")
    if group == "mu_p":
        return hopf.mu_p_obstruction(A).as_dict()
    if group not in _GROUPS:
        raise SchemaError(f"unknown group {group!r}", witness=sorted(_GROUPS) + ["mu_p"])
    return hopf.strictness_check(hopf.canonical_deformation(_GROUPS[group](A))).as_dict()


def _op_balanced(ctx, cmd):
    if "object" in cmd:
        pres = dr.presentation(ctx.obj(cmd["object"]))
    else:
        A = _group_ring(ctx, cmd)
        group = cmd.get("group")
        if group not in _GROUPS:
            raise SchemaError(f"unknown group {group!r}", witness=sorted(_GROUPS))
        pres = _GROUPS[group](A)
    return hopf.balanced_check(pres).as_dict()


def _op_divide(ctx, cmd):
    A = ctx.ring
    N = int(cmd.get("precision", ctx.options["precision"]))
    y = evaluate(str(cmd["y"]), A, N)
    x = divide_by_z_minus_zeta(y, int(cmd.get("d", 1)))
    return {"quotient": x.format(), "precision": x.precision}


def _op_verify(ctx, cmd):
    only = cmd.get("criteria")
    res = suite.run_suite(seed=int(cmd.get("seed", ctx.options["seed"])), only=only)
    timings = ctx.options.get("timings", False)
    rows = [r.as_dict(timings) for r in res]
    passed = sum(1 for r in res if r.passed)
    value = {"passed": passed, "total": len(res), "criteria": rows}
    if passed != len(res):
        raise SuiteFailure(f"{len(res) - passed} criterion(s) failed", value)
    return value


class SuiteFailure(ShtukaError):
    def __init__(self, message, value):
        super().__init__(message, witness=None)
        self.value = value


DISPATCH = {
    "order": _op_order, "points": _op_points, "roundtrip": _op_roundtrip,
    "decompose": _op_decompose, "colie": _op_colie, "nilpotence": _op_nilpotence,
    "verschiebung": _op_verschiebung, "boundedness": _op_boundedness,
    "tower": _op_tower, "omega": _op_omega, "frobenius-kernel": _op_frobenius_kernel,
    "zd-verschiebung": _op_zd, "hodge": _op_hodge, "deform": _op_deform,
    "sequence": _op_sequence, "strictness": _op_strictness,
    "balanced": _op_balanced, "divide": _op_divide, "verify-suite": _op_verify,
}


def resolve_options(doc_options=None, env=None, flags=None):
    """defaults < document options < environment < command-line flags."""
    env = os.environ if env is None else env
    out = dict(DEFAULTS)
    out.update({k: v for k, v in (doc_options or {}).items() if k in OPTION_TYPES})
    for key, typ in OPTION_TYPES.items():
        val = env.get(ENV_PREFIX + key.upper())
        if val is not None:
            out[key] = typ(val)
    for key, val in (flags or {}).items():
        if val is not None:
            out[key] = val
    return out


def run(doc: ProblemDocument, options=None) -> Report:
    """Execute the commands in order; errors are recorded per command."""
    options = options or resolve_options(doc.options, env={})
    ctx = Context(doc, options)
    header = {"version": __version__, "numpy": np.__version__,
              "seed": options["seed"],
              "options": {k: options[k] for k in sorted(OPTION_TYPES)},
              "ring": repr(ctx.ring) if ctx.ring is not None else None}
    results = []
    for i, cmd in enumerate(doc.commands):
        entry = {"index": i, "op": cmd["op"], "input": cmd}
        try:
            entry["value"] = DISPATCH[cmd["op"]](ctx, cmd)
            entry["status"] = "ok"
        except SuiteFailure as exc:
            entry["value"] = exc.value
            entry["status"] = "failed"
            entry["error"] = {"type": "SuiteFailure", "message": str(exc)}
        except (ShtukaError, ValueError, KeyError) as exc:
            entry["status"] = "error"
            entry["error"] = {"type": type(exc).__name__, "message": str(exc),
                              "witness": getattr(exc, "witness", None)}
        results.append(_plain(entry))
    return Report(_plain(header), results)


# -- output -------------------------------------------------------------------------

def emit(report: Report, format="human") -> str:
    if format == "structured":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    lines = [f"fqshtuka {report.header.get('version', '?')}  seed={report.header.get('seed')}"]
    opts = report.header.get("options") or {}
    if opts:
        lines.append("options: " + " ".join(f"{k}={v}" for k, v in sorted(opts.items())))
    if report.header.get("ring"):
        lines.append(f"ring: {report.header['ring']}")
    for r in report.results:
        lines.append("")
        lines.append(f"[{r['status']}] #{r['index']} {r['op']}"
                     + (f" {r['input'].get('object')}" if r["input"].get("object") else ""))
        if r["op"] == "verify-suite" and "value" in r:
            v = r["value"]
            lines.append(f"  passed {v['passed']}/{v['total']}")
            for c in v["criteria"]:
                mark = "PASS" if c["passed"] else "FAIL"
                lines.append(f"  {mark}  {c['criterion']:>2}  {c['name']}  ({c['cases']} cases)")
            for c in v["criteria"]:
                if c["failures"]:
                    lines.append(f"  criterion {c['criterion']} first failure: "
                                 + json.dumps(c["failures"][0], sort_keys=True))
            continue
        for key, val in sorted(r.get("value", {}).items()):
            lines.append(f"  {key}: {json.dumps(val, sort_keys=True)}")
        if "error" in r:
            e = r["error"]
            lines.append(f"  error: {e['type']}: {e['message']}")
            if e.get("witness") is not None:
                lines.append(f"  witness: {json.dumps(e['witness'], sort_keys=True)}")
    lines.append("")
    lines.append(f"summary: {report.summary['commands']} command(s), "
                 f"{report.summary['failed']} failed")
    return "\n".join(lines) + "\n"


# -- entry point --------------------------------------------------------------------

def _arg_parser():
    p = argparse.ArgumentParser(prog="fqshtuka",
                                description="Run shtuka problem documents and the verification suite.")
    p.add_argument("document", nargs="?", help="problem document (JSON); '-' for stdin")
    p.add_argument("--precision", type=int, help="z-adic precision of local shtukas")
    p.add_argument("--dmax", type=int, help="largest exponent searched for (z - zeta)^d")
    p.add_argument("--emax", type=int, help="bound on the z-adic order of determinants")
    p.add_argument("--seed", type=int, help="seed of the randomized suites")
    p.add_argument("--format", choices=("human", "structured"), default=None)
    p.add_argument("--suite", action="store_true", help="run the full verification suite")
    p.add_argument("--criteria", type=int, nargs="*", help="restrict --suite to these criteria")
    p.add_argument("--timings", action="store_true", help="include timings (not reproducible)")
    p.add_argument("-o", "--output", help="write the report here instead of stdout")
    return p


def main(argv=None):
    args = _arg_parser().parse_args(argv)
    fmt = args.format or os.environ.get(ENV_PREFIX + "FORMAT", "human")
    if args.suite:
        raw = {"schema": DOCUMENT_SCHEMA,
               "commands": [{"op": "verify-suite"} if not args.criteria
                            else {"op": "verify-suite", "criteria": args.criteria}]}
        text = json.dumps(raw)
    elif args.document in (None, "-"):
        text = sys.stdin.read()
    else:
        with open(args.document, encoding="utf-8") as fh:
            text = fh.read()
    try:
        doc = parse(text)
        if isinstance(doc, Report):
            raise SchemaError("expected a problem document, got a report")
        flags = {"precision": args.precision, "dmax": args.dmax,
                 "emax": args.emax, "seed": args.seed}
        options = resolve_options(doc.options, flags=flags)
        options["timings"] = args.timings
        report = run(doc, options)
    except (SyntaxError, SchemaError, InvalidAlgebra) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    out = emit(report, fmt)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    return 0 if report.failed == 0 else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
