"""Command line interface: ``scv <subcommand> ...``.

Exit status is 0 when the computation met its tolerance, 2 when it ran but did
not, and 1 on bad input.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings

from . import cache
from .forms import FormSpec
from .poincare import PoincareSpec, SumControl, TruncationWarning, cusp_coeffs, qplus_coeffs
from .qalg import eta_power
from .shiftconv import CONVOLUTION_CONTROL, ConvolutionRequest, dhat, dhat_nu, l_series
from .specialfun import kloosterman
from .verify import verify_example

EXIT_OK, EXIT_INPUT, EXIT_TOLERANCE = 0, 1, 2


def _control(args, base: SumControl) -> SumControl:
    return SumControl(
        c_max=getattr(args, "cmax", None) or base.c_max,
        tol=getattr(args, "tol", None) or base.tol,
        max_terms=base.max_terms,
        tail_window=getattr(args, "window", None) or base.tail_window,
        smoothing=base.smoothing,
    )


def _cmd_eta(args) -> int:
    s = eta_power(args.power, args.scale, args.nmax)
    if args.out:
        cache.write_series(args.out, s)
        print(f"wrote q^{s.start}..q^{s.nmax} to {args.out}")
    else:
        for n in range(s.start, s.nmax + 1):
            print(n, s[n])
    return EXIT_OK


def _cmd_kloosterman(args) -> int:
    print(repr(kloosterman(args.m, args.n, args.c)))
    return EXIT_OK


def _cmd_poincare(args) -> int:
    spec = PoincareSpec(args.m, args.k, args.N, _control(args, SumControl()))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        if args.kind == "cusp":
            est = cusp_coeffs(spec, [args.n])[0]
        else:
            est = qplus_coeffs(spec, [args.n])[0]
    print(json.dumps({"value": est.value, "tail_estimate": est.tail_estimate, "c_used": est.c_used, "converged": est.converged}))
    return EXIT_OK if est.converged else EXIT_TOLERANCE


def _cmd_dhat(args) -> int:
    f1, f2 = FormSpec.parse(args.f1), FormSpec.parse(args.f2)
    req = ConvolutionRequest(f1, f2, args.h, args.nu, args.s, args.terms, _control(args, CONVOLUTION_CONTROL))
    v = dhat_nu(req) if args.nu else dhat(req)
    print(json.dumps({"h": args.h, "nu": args.nu, "s": req.point, **v.__dict__}))
    return EXIT_OK if v.converged else EXIT_TOLERANCE


def _cmd_lseries(args) -> int:
    f1, f2 = FormSpec.parse(args.f1), FormSpec.parse(args.f2)
    res = l_series(f1, f2, args.nu, args.hmax, args.terms, _control(args, CONVOLUTION_CONTROL))
    if args.tsv:
        print("h\tvalue\ttail_estimate\tterms_used\tconverged")
        for r in res.records():
            print(f"{r['h']}\t{r['value']!r}\t{r['tail_estimate']!r}\t{r['terms_used']}\t{r['converged']}")
    else:
        print(res.to_json())
    return EXIT_OK if res.converged else EXIT_TOLERANCE


def _cmd_verify(args) -> int:
    which = int(args.example[-1])
    report = verify_example(which, _control(args, CONVOLUTION_CONTROL), terms=args.terms)
    if args.json:
        print(report.to_json())
    else:
        d = report.to_dict()
        print(f"example {which}: {d['identity']['lhs']} = {d['identity']['rhs']}")
        print("F basis: " + ", ".join(f"{c:.10g}*[{b}]" for c, b in zip(report.coefficients, report.basis)))
        print(f"{'h':>3} {'lhs':>22} {'rhs':>22} {'residual':>11} {'bound':>10}")
        for row in report.per_h:
            mark = "*" if row["held_out"] else " "
            print(f"{row['h']:>3}{mark}{row['lhs']:22.10f} {row['rhs']:22.10f} {row['residual']:11.3e} {row['bound']:10.3e}")
        for name, ok in report.checks.items():
            print(f"  {'ok  ' if ok else 'FAIL'} {name}")
        for t in report.details.get("T", []):
            print(f"  T(f;{t['h']}) = {t['T']:.6f}  mock side {t['T_mock_side']:.12f} ~ {t['rational']}")
        print("PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_TOLERANCE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scv", description="Shifted convolution values and mock modular products.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eta", help="expand eta(S tau)^P")
    e.add_argument("--power", type=int, required=True)
    e.add_argument("--scale", type=int, default=1)
    e.add_argument("--nmax", type=int, required=True)
    e.add_argument("--out", help="write an SCV1 table instead of printing")
    e.set_defaults(func=_cmd_eta)

    k = sub.add_parser("kloosterman", help="K(m, n, c)")
    k.add_argument("-m", type=int, required=True)
    k.add_argument("-n", type=int, required=True)
    k.add_argument("-c", type=int, required=True)
    k.set_defaults(func=_cmd_kloosterman)

    pc = sub.add_parser("poincare", help="coefficients of P(m,k,N) or of Q+(-m,k,N)")
    pc.add_argument("kind", choices=["cusp", "qplus"])
    pc.add_argument("-m", type=int, required=True)
    pc.add_argument("-k", type=int, required=True)
    pc.add_argument("-N", type=int, default=1)
    pc.add_argument("-n", type=int, required=True)
    pc.add_argument("--cmax", type=int)
    pc.add_argument("--tol", type=float)
    pc.set_defaults(func=_cmd_poincare)

    for name, func in (("dhat", _cmd_dhat), ("lseries", _cmd_lseries)):
        d = sub.add_parser(name, help="symmetrised shifted convolution " + ("value" if name == "dhat" else "series"))
        d.add_argument("--f1", required=True, help="eta:P:S | poincare:M:K:N | file:PATH[:K[:N]]")
        d.add_argument("--f2", required=True)
        d.add_argument("--nu", type=int, default=0)
        d.add_argument("--terms", type=int, default=1_000_000)
        d.add_argument("--tol", type=float)
        d.add_argument("--window", type=int, help="averaging window (default terms/6)")
        if name == "dhat":
            d.add_argument("--h", type=int, required=True)
            d.add_argument("--s", type=float)
        else:
            d.add_argument("--hmax", type=int, required=True)
            fmt = d.add_mutually_exclusive_group()
            fmt.add_argument("--json", action="store_true", default=True)
            fmt.add_argument("--tsv", action="store_true")
        d.set_defaults(func=func)

    v = sub.add_parser("verify", help="reproduce a worked example end to end")
    v.add_argument("example", choices=["example1", "example2", "example3"])
    v.add_argument("--terms", type=int, default=1_000_000)
    v.add_argument("--tol", type=float)
    v.add_argument("--json", action="store_true")
    v.set_defaults(func=_cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"scv: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
