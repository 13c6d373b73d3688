"""Command-line front end.

Systems are read from JSON documents with keys ``A``, ``B``, ``C`` and an
optional ``D`` (nested row-major arrays), an optional ``name`` and optional
``expected_zeros`` given as ``{"re": x, "im": y}`` objects.  Reports go to
standard output, diagnostics to standard error.

Exit codes: 0 success, 2 parse error, 3 method failure, 4 verification
failure.
"""

import argparse
import json
import sys as _sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DecompositionNotApplicable,
    InvalidInputError,
    InvZeroError,
    MethodFailure,
    NumericalFailure,
    OracleNotApplicable,
    StructureViolation,
    UndefinedRelativeDegree,
    VerificationFailure,
)
from .extensions import dynamic_extension, invariant_zeros_general
from .gazero import gazero_zeros
from .izform import build_transformation, decompose, invariant_zeros_izform, rank_diagnostics
from .linalg import DEFAULT_TOL, RankTolerance
from .model import StateSpaceRealization, ZeroMultiset, match_multisets, relative_degree
from .rosenbrock import (
    VERIFY_FLOOR,
    estimate_normal_rank,
    evaluate_pencil,
    verify_zeros,
    zeros_by_det_interpolation,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_METHOD = 3
EXIT_VERIFY = 4

METHODS = ("izform", "gazero", "detinterp", "auto")

#: zeros closer than this (absolute plus relative) are reported as one
#: entry with multiplicity
GROUP_TOL = 1e-6

#: agreement tolerance used by ``compare``
COMPARE_TOL = 1e-6


class DocumentError(InvalidInputError):
    """Malformed input document; the message names the source and field."""


# -- documents ----------------------------------------------------------------


def _complex_to_json(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _complex_from_json(item, where):
    if isinstance(item, (int, float)) and not isinstance(item, bool):
        return complex(item)
    if isinstance(item, dict) and "re" in item:
        try:
            return complex(float(item["re"]), float(item.get("im", 0.0)))
        except (TypeError, ValueError):
            pass
    raise DocumentError(f"{where}: expected a number or {{\"re\": x, \"im\": y}}, got {item!r}")


def _matrix_field(doc, key, source, required=True):
    if key not in doc or doc[key] is None:
        if required:
            raise DocumentError(f"{source}: field '{key}' is missing")
        return None
    rows = doc[key]
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise DocumentError(f"{source}: field '{key}' must be a non-empty list of rows")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DocumentError(
                f"{source}: field '{key}' row {i} has {len(row)} entries, expected {width}")
        for j, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise DocumentError(f"{source}: field '{key}'[{i}][{j}] is not a number: {x!r}")
    return np.array(rows, dtype=float).reshape(len(rows), width)


def _parse_json(text, source):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def _load_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DocumentError(f"{path}: cannot read ({exc.strerror})") from exc
    return _parse_json(text, str(path))


@dataclass(frozen=True, eq=False)
class SystemDocument:
    """A parsed input document."""

    system: StateSpaceRealization
    expected_zeros: tuple | None = None

    @property
    def name(self):
        return self.system.name

    @classmethod
    def from_dict(cls, doc, source="<document>"):
        if not isinstance(doc, dict):
            raise DocumentError(f"{source}: top level must be an object with keys A, B, C")
        A = _matrix_field(doc, "A", source)
        B = _matrix_field(doc, "B", source)
        C = _matrix_field(doc, "C", source)
        D = _matrix_field(doc, "D", source, required=False)
        name = doc.get("name")
        if name is not None and not isinstance(name, str):
            raise DocumentError(f"{source}: field 'name' must be a string")
        try:
            system = StateSpaceRealization(A, B, C, D, name=name)
        except InvalidInputError as exc:
            raise DocumentError(f"{source}: {exc}") from exc
        expected = doc.get("expected_zeros")
        if expected is not None:
            if not isinstance(expected, list):
                raise DocumentError(f"{source}: field 'expected_zeros' must be a list")
            expected = tuple(_complex_from_json(z, f"{source}: expected_zeros[{k}]")
                             for k, z in enumerate(expected))
        return cls(system, expected)

    @classmethod
    def parse(cls, text, source="<document>"):
        return cls.from_dict(_parse_json(text, source), source)

    @classmethod
    def load(cls, path):
        if str(path) == "-":
            return cls.parse(_sys.stdin.read(), "<stdin>")
        return cls.from_dict(_load_json(path), str(path))

    def to_dict(self):
        s = self.system
        out = {}
        if s.name is not None:
            out["name"] = s.name
        out["A"] = s.A.tolist()
        out["B"] = s.B.tolist()
        out["C"] = s.C.tolist()
        if s.has_feedthrough:
            out["D"] = s.D.tolist()
        if self.expected_zeros is not None:
            out["expected_zeros"] = [_complex_to_json(z) for z in self.expected_zeros]
        return out

    def dumps(self):
        """Canonical writer; floats are written with ``repr`` precision."""
        return json.dumps(self.to_dict(), indent=2) + "\n"


# -- reports --------------------------------------------------------------------


@dataclass(frozen=True)
class ReportedZero:
    re: float
    im: float
    multiplicity: int
    verified: bool | None
    pencil_rank: int | None = None

    @property
    def value(self):
        return complex(self.re, self.im)


@dataclass(frozen=True)
class ZeroReport:
    method: str
    zeros: tuple
    normal_rank: int | None = None
    rho: tuple | None = None
    l_eta: int | None = None
    condition_T: float | None = None
    name: str | None = None
    notes: tuple = ()
    timing: float | None = None

    @property
    def values(self):
        """Zeros repeated by multiplicity."""
        return np.array([z.value for z in self.zeros for _ in range(z.multiplicity)],
                        dtype=complex)

    @property
    def all_verified(self):
        return all(z.verified for z in self.zeros)

    def to_dict(self):
        return {
            "name": self.name,
            "method": self.method,
            "zeros": [
                {"re": z.re, "im": z.im, "multiplicity": z.multiplicity,
                 "verified": z.verified, "pencil_rank": z.pencil_rank}
                for z in self.zeros
            ],
            "normal_rank": self.normal_rank,
            "rho": None if self.rho is None else list(self.rho),
            "l_eta": self.l_eta,
            "condition_T": self.condition_T,
            "notes": list(self.notes),
            "timing": self.timing,
        }

    @classmethod
    def from_dict(cls, d):
        zeros = tuple(ReportedZero(float(z["re"]), float(z["im"]), int(z["multiplicity"]),
                                   z.get("verified"), z.get("pencil_rank"))
                      for z in d["zeros"])
        rho = d.get("rho")
        return cls(
            method=d["method"],
            zeros=zeros,
            normal_rank=d.get("normal_rank"),
            rho=None if rho is None else tuple(rho),
            l_eta=d.get("l_eta"),
            condition_T=d.get("condition_T"),
            name=d.get("name"),
            notes=tuple(d.get("notes", ())),
            timing=d.get("timing"),
        )

    def format_pretty(self):
        lines = [f"system: {self.name or '(unnamed)'}", f"method: {self.method}"]
        if self.rho is not None:
            lines.append(f"relative degrees: {', '.join(str(r) for r in self.rho)}")
        if self.l_eta is not None:
            lines.append(f"zero dynamics order: {self.l_eta}")
        if self.condition_T is not None:
            lines.append(f"cond(T): {self.condition_T:.3e}")
        lines.append(f"normal rank: {self.normal_rank}")
        if not self.zeros:
            lines.append("no invariant zeros")
        for z in self.zeros:
            tag = "verified" if z.verified else "NOT verified"
            lines.append(f"  {z.value:.10g}  x{z.multiplicity}  rank {z.pencil_rank}  {tag}")
        lines.extend(f"note: {n}" for n in self.notes)
        if self.timing is not None:
            lines.append(f"time: {self.timing:.4f} s")
        return "\n".join(lines) + "\n"


def build_report(system, zeros, tol=None, seed=0, notes=()):
    """Group `zeros` and re-check each distinct value against the pencil of `system`."""
    tol = DEFAULT_TOL if tol is None else tol
    ms = zeros if isinstance(zeros, ZeroMultiset) else ZeroMultiset(zeros, "candidates")
    groups = ZeroMultiset(ms.values, ms.method).grouped(GROUP_TOL, GROUP_TOL)
    normal_rank = estimate_normal_rank(system, tol, seed=seed)
    checked = verify_zeros(system, [g[0] for g in groups], tol, normal_rank=normal_rank)
    ranks = checked.info.get("pencil_ranks", [])
    reported = []
    for (value, mult, _), ok, rank in zip(groups, checked.verified, ranks):
        re, im = float(value.real), float(value.imag)
        if abs(im) <= GROUP_TOL * (1.0 + abs(re)):
            im = 0.0
        reported.append(ReportedZero(re, im, mult, bool(ok), int(rank)))
    info = ms.info
    rho = info.get("rho")
    cond = info.get("condition_T")
    return ZeroReport(
        method=ms.method,
        zeros=tuple(reported),
        normal_rank=int(normal_rank),
        rho=None if rho is None else tuple(int(r) for r in rho),
        l_eta=info.get("l_eta"),
        condition_T=None if cond is None else float(cond),
        name=system.name,
        notes=tuple(notes),
    )


# -- methods ------------------------------------------------------------------


def _alpha(extend):
    return None if extend in (None, "auto") else float(extend)


def _drop_extension_artifacts(system, cand, alpha, tol, seed):
    """Verify on the original system, dropping unverified candidates at ``-alpha``."""
    checked = verify_zeros(system, cand, tol, seed=seed)
    near = np.abs(checked.values + alpha) <= 1e-6 * (1.0 + alpha)
    return checked.subset(~(near & ~checked.verified))


def run_method(system, method, tol=None, seed=0, extend=None, rounds=3):
    """Zeros of `system` by one method; returns ``(ZeroMultiset, notes)``.

    Raises the library's exceptions unchanged when a method does not apply.
    """
    notes = []
    if method == "auto":
        try:
            return invariant_zeros_general(system, tol, seed=seed, rounds=rounds,
                                           alpha=_alpha(extend)), notes
        except MethodFailure as exc:
            if system.is_square or system.has_feedthrough:
                raise
            notes.append(f"invariant zero form unavailable ({exc}); used the geometric method")
            cand = gazero_zeros(system, tol)
            checked = verify_zeros(system, cand, tol, seed=seed)
            return ZeroMultiset(checked.values, "gazero (fallback)", checked.verified,
                                checked.info), notes

    if method == "detinterp":
        return zeros_by_det_interpolation(system, tol, seed=seed), notes

    if method not in ("izform", "gazero"):
        raise InvalidInputError(f"unknown method {method!r}")
    if system.has_feedthrough:
        if extend is None:
            raise DecompositionNotApplicable(
                "D != 0: pass --extend to apply a dynamic extension first")
        ext = dynamic_extension(system, _alpha(extend))
        notes.append(f"dynamic extension with alpha = {ext.alpha:.6g}")
        if method == "izform":
            if not system.is_square:
                raise DecompositionNotApplicable(
                    f"{system.kind} system: use --method auto for squaring")
            cand = invariant_zeros_izform(ext.extended, tol, verify=False, seed=seed)
            cand = ZeroMultiset(cand.values, "izform+extension", info=cand.info)
        else:
            cand = gazero_zeros(ext.extended, tol)
            cand = ZeroMultiset(cand.values, "gazero+extension", info=cand.info)
        return _drop_extension_artifacts(system, cand, ext.alpha, tol, seed), notes
    if method == "izform":
        return invariant_zeros_izform(system, tol, seed=seed), notes
    return gazero_zeros(system, tol), notes


# -- commands -------------------------------------------------------------------


def _tolerance(args):
    return DEFAULT_TOL if args.tol is None else RankTolerance.fixed(args.tol)


def _emit(obj, args, pretty_text=None):
    if args.pretty and pretty_text is not None:
        _sys.stdout.write(pretty_text)
    else:
        indent = 2 if args.pretty else None
        _sys.stdout.write(json.dumps(obj, indent=indent) + "\n")


def cmd_zeros(args):
    doc = SystemDocument.load(args.input)
    tol = _tolerance(args)
    start = time.perf_counter()
    zeros, notes = run_method(doc.system, args.method, tol, args.seed, args.extend, args.rounds)
    report = build_report(doc.system, zeros, tol, args.seed, notes)
    if args.timing:
        report = ZeroReport(**{**report.__dict__, "timing": time.perf_counter() - start})
    _emit(report.to_dict(), args, report.format_pretty())
    for note in notes:
        print(f"note: {note}", file=_sys.stderr)
    if not report.all_verified:
        bad = [f"{z.value:.6g}" for z in report.zeros if not z.verified]
        print(f"error: zeros without a rank drop: {', '.join(bad)}", file=_sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _matrix_json(M):
    M = np.asarray(M)
    if np.iscomplexobj(M):
        return [[_complex_to_json(x) for x in row] for row in M]
    return M.tolist()


def cmd_decompose(args):
    doc = SystemDocument.load(args.input)
    tol = _tolerance(args)
    system = doc.system
    if not system.is_square:
        profile = relative_degree(system, tol)
        diag = rank_diagnostics(system, tuple(profile), tol)
        raise DecompositionNotApplicable(
            f"{system.kind} system ({system.n_inputs} inputs, {system.n_outputs} outputs) has "
            f"no invariant zero decomposition; rank diagnostics: {diag}", diag)
    target = system
    notes = []
    if system.has_feedthrough:
        if args.extend is None:
            raise DecompositionNotApplicable(
                "D != 0: pass --extend to decompose the dynamically extended system")
        ext = dynamic_extension(system, _alpha(args.extend))
        target = ext.extended
        notes.append(f"dynamic extension with alpha = {ext.alpha:.6g}")
    bz = None
    if args.bz is not None:
        bz = _matrix_field({"Bz": _load_json(args.bz)}, "Bz", args.bz)
    profile = relative_degree(target, tol)
    bundle = build_transformation(target, profile, tol, bz=bz)
    form = decompose(target, bundle, tol)
    out = {
        "name": system.name,
        "rho": list(form.rho_profile),
        "l_eta": form.l_eta,
        "condition_T": form.bundle.condition_T,
        "T": _matrix_json(bundle.T),
        "S": _matrix_json(bundle.S),
        "A_eta": _matrix_json(form.A_eta),
        "A_etaxi": _matrix_json(form.A_etaxi),
        "A_xieta": _matrix_json(form.A_xieta),
        "A_xi": _matrix_json(form.A_xi),
        "B_xi": _matrix_json(form.B_xi),
        "C_xi": _matrix_json(form.C_xi),
        "residuals": form.residuals,
        "structure_tol": form.structure_tol,
        "notes": notes,
    }
    pretty = None
    if args.pretty:
        with np.printoptions(precision=6, suppress=True, linewidth=120):
            parts = [f"system: {system.name or '(unnamed)'}", *(f"note: {n}" for n in notes),
                     f"relative degrees: {list(form.rho_profile)}", f"l_eta: {form.l_eta}",
                     f"cond(T): {form.bundle.condition_T:.3e}"]
            for key in ("T", "S", "A_eta", "A_etaxi", "A_xieta", "A_xi", "B_xi", "C_xi"):
                parts.append(f"{key} =\n{np.asarray(out[key])}")
            parts.append("residuals:")
            parts.extend(f"  {k}: {v:.3e}" for k, v in form.residuals.items())
        pretty = "\n".join(parts) + "\n"
    _emit(out, args, pretty)
    return EXIT_OK


def _parse_candidates(text):
    if text is None or not text.strip():
        return []
    out = []
    for item in text.split(","):
        item = item.strip().replace("i", "j").replace(" ", "")
        try:
            out.append(complex(item))
        except ValueError as exc:
            raise DocumentError(f"--zeros: cannot parse candidate {item!r}") from exc
    return out


def cmd_verify(args):
    doc = SystemDocument.load(args.input)
    tol = _tolerance(args)
    cands = _parse_candidates(args.zeros)
    normal_rank = estimate_normal_rank(doc.system, tol, seed=args.seed)
    checked = verify_zeros(doc.system, cands, tol, normal_rank=normal_rank)
    loose = tol.loosened(VERIFY_FLOOR)
    rows = []
    for k, z in enumerate(cands):
        ev = evaluate_pencil(doc.system, z, normal_rank, loose)
        rows.append({"point": _complex_to_json(z), "pencil_rank": ev.chi_rank,
                     "drops": bool(checked.verified[k]), "sigma_ratio": ev.sigma_ratio,
                     "local_contrast": checked.info["contrast"][k]})
    out = {"name": doc.name, "normal_rank": int(normal_rank), "candidates": rows}
    lines = [f"system: {doc.name or '(unnamed)'}", f"normal rank: {normal_rank}"]
    lines += [f"  {complex(r['point']['re'], r['point']['im']):.10g}  rank {r['pencil_rank']}  "
              f"{'drop' if r['drops'] else 'no drop'}" for r in rows]
    _emit(out, args, "\n".join(lines) + "\n")
    return EXIT_OK


def _applicable(system, method, extend):
    if method == "auto":
        return None
    if not system.is_square:
        return "nonsquare system"
    if method == "detinterp":
        return None
    if system.has_feedthrough and extend is None:
        return "D != 0 and no --extend"
    return None


def compare_system(system, tol=None, seed=0, extend=None, rounds=3):
    """Run every method on `system` and match the results pairwise."""
    results = {}
    for method in METHODS:
        reason = _applicable(system, method, extend)
        if reason is not None:
            results[method] = {"status": "not-applicable", "reason": reason}
            continue
        try:
            zeros, notes = run_method(system, method, tol, seed, extend, rounds)
        except (InvZeroError, ArithmeticError) as exc:
            results[method] = {"status": "failed", "error": type(exc).__name__,
                               "message": str(exc)}
            continue
        report = build_report(system, zeros, tol, seed, notes)
        results[method] = {"status": "ok", "report": report.to_dict(),
                           "all_verified": report.all_verified, "_values": report.values}
    agreement = []
    ok = [m for m in METHODS if results[m]["status"] == "ok"]
    for i, left in enumerate(ok):
        for right in ok[i + 1:]:
            m = match_multisets(results[left]["_values"], results[right]["_values"],
                                COMPARE_TOL, COMPARE_TOL)
            agreement.append({"left": left, "right": right, "match": m.matched,
                              "max_error": m.max_error if m.matched else None})
    for m in ok:
        del results[m]["_values"]
    return {"name": system.name, "methods": results, "agreement": agreement}


def cmd_compare(args):
    path = Path(args.input)
    if args.input != "-" and path.is_dir():
        inputs = sorted(p for p in path.iterdir() if p.suffix == ".json")
    else:
        inputs = [args.input]
    tol = _tolerance(args)
    outputs = []
    status = EXIT_OK
    for item in inputs:
        doc = SystemDocument.load(item)
        res = compare_system(doc.system, tol, args.seed, args.extend, args.rounds)
        res["input"] = str(item)
        outputs.append(res)
        if any(not a["match"] for a in res["agreement"]):
            status = max(status, EXIT_VERIFY)
        if not any(r["status"] == "ok" for r in res["methods"].values()):
            status = max(status, EXIT_METHOD)
    lines = []
    for res in outputs:
        lines.append(f"{res['input']}:")
        for m, r in res["methods"].items():
            if r["status"] == "ok":
                vals = ", ".join(f"{complex(z['re'], z['im']):.6g}"
                                 + (f" x{z['multiplicity']}" if z["multiplicity"] > 1 else "")
                                 for z in r["report"]["zeros"])
                lines.append(f"  {m:10s} {{{vals}}}")
            else:
                lines.append(f"  {m:10s} {r['status']}: {r.get('reason') or r.get('message')}")
        for a in res["agreement"]:
            lines.append(f"  {a['left']} vs {a['right']}: {'agree' if a['match'] else 'DIFFER'}")
    _emit(outputs if len(outputs) > 1 or path.is_dir() else outputs[0], args,
          "\n".join(lines) + "\n")
    return status


# -- entry point ------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None,
                        help="relative singular-value threshold for rank decisions")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for every randomized step (default 0)")
    common.add_argument("--method", choices=METHODS, default="auto")
    common.add_argument("--extend", nargs="?", const="auto", default=None, metavar="ALPHA",
                        help="dynamic extension for D != 0; ALPHA defaults to 1 + spectral radius")
    common.add_argument("--rounds", type=int, default=3, help="squaring rounds (default 3)")
    out = common.add_mutually_exclusive_group()
    out.add_argument("--json", action="store_true", help="JSON output (default)")
    out.add_argument("--pretty", action="store_true", help="human-readable output")
    common.add_argument("--timing", action="store_true", help="include wall time in reports")

    parser = argparse.ArgumentParser(prog="invzero", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("zeros", parents=[common], help="compute invariant zeros")
    p.add_argument("input", help="system document, or - for standard input")
    p.set_defaults(func=cmd_zeros)
    p = sub.add_parser("decompose", parents=[common], help="print the invariant zero form")
    p.add_argument("input")
    p.add_argument("--bz", default=None, metavar="FILE",
                   help="JSON matrix forcing the zero dynamics rows of T")
    p.set_defaults(func=cmd_decompose)
    p = sub.add_parser("verify", parents=[common], help="check candidate zeros by rank drop")
    p.add_argument("input")
    p.add_argument("--zeros", default="", help='comma-separated candidates, e.g. "-1, 0.5+2i"')
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("compare", parents=[common], help="run all methods and cross-check")
    p.add_argument("input", help="system document or a directory of documents")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.extend not in (None, "auto"):
        try:
            float(args.extend)
        except ValueError:
            print(f"error: --extend expects a number, got {args.extend!r}", file=_sys.stderr)
            return EXIT_PARSE
    try:
        return args.func(args)
    except (DocumentError, InvalidInputError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_PARSE
    except VerificationFailure as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_VERIFY
    except (MethodFailure, DecompositionNotApplicable, OracleNotApplicable, StructureViolation,
            UndefinedRelativeDegree, NumericalFailure) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=_sys.stderr)
        return EXIT_METHOD


if __name__ == "__main__":
    raise SystemExit(main())
