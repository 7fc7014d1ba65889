"""Command-line front end: expand | rg | verify | simulate.

Exit codes: 0 success; 1 at least one check failed; 2 bad spec or usage;
3 polar pairing violation; 4 numeric overflow.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys

from .gaussrat import GaussianRational
from .poly import MultiPoly, HarmonicSeries, PolyContext
from .systems import SpecError, parse_spec
from .engine import expand_table, make_context
from .renorm import (
    derive_rg,
    renormalized_expansion,
    invert_amplitudes,
    renormalized_amplitudes,
    polar_transform,
    PolarPairingError,
)
from .checks import run_all_checks, random_spec, corrupt_table
from .numeric import (
    NumericOverflowError,
    simulate_conjugate_pair,
    emit_csv,
    emit_svg,
)
from . import demos
from . import difference as diffmod


# --------------------------------------------------------------------------
# Machine-format serialization (round-trips exactly)
# --------------------------------------------------------------------------

def poly_to_data(p: MultiPoly):
    out = []
    for e in sorted(p.terms, key=lambda e: (e[0], sum(e[1:]), e)):
        c = p.terms[e]
        out.append([list(e), [str(c.re), str(c.im)]])
    return out


def poly_from_data(ctx: PolyContext, data) -> MultiPoly:
    from fractions import Fraction

    terms = {}
    for exps, (re, im) in data:
        terms[tuple(exps)] = GaussianRational(Fraction(re), Fraction(im))
    return MultiPoly(ctx, terms)


def table_to_machine(table) -> dict:
    return {
        "kind": "secular_table",
        "spec": table.spec.to_document(),
        "order": table.ctx.order,
        "resonant": [[j + 1, m] for j, m in table.resonant],
        "components": [
            [[m, poly_to_data(p)] for m, p in sorted(comp.entries.items())]
            for comp in table.components
        ],
    }


def table_from_machine(text: str):
    doc = json.loads(text)
    if doc.get("kind") != "secular_table":
        raise SpecError("not a machine-format secular table")
    spec = parse_spec(json.dumps(doc["spec"]))
    ctx = make_context(spec)
    comps = [
        HarmonicSeries(ctx, {m: poly_from_data(ctx, data) for m, data in entries})
        for entries in doc["components"]
    ]
    return spec, ctx, comps


def rg_to_machine(spec, rg) -> dict:
    return {
        "kind": "rg_system",
        "spec": spec.to_document(),
        "order": rg.ctx.order,
        "amplitudes": "renormalized",
        "fields": [[name, poly_to_data(f)] for name, f in zip(rg.ctx.amplitudes, rg.fields)],
    }


def rg_from_machine(text: str):
    from .renorm import RGSystem

    doc = json.loads(text)
    if doc.get("kind") != "rg_system":
        raise SpecError("not a machine-format RG system")
    spec = parse_spec(json.dumps(doc["spec"]))
    ctx = make_context(spec)
    fields = []
    for name, data in doc["fields"]:
        if name not in ctx.amplitudes:
            raise SpecError(f"unknown amplitude {name!r} in machine input")
        fields.append(poly_from_data(ctx, data))
    factors = spec.factors if spec.klass == "scalar" else ()
    return spec, RGSystem(ctx, spec.klass, fields, factors)


# --------------------------------------------------------------------------
# Input resolution
# --------------------------------------------------------------------------

def load_spec(args) -> tuple:
    """Returns (spec, label); enforces exactly one input source."""
    builtin = getattr(args, "builtin", None)
    path = getattr(args, "spec", None)
    if builtin and path:
        raise SpecError("give either --builtin or --spec, not both")
    if builtin:
        return demos.load_builtin(builtin, args.order), builtin
    if path:
        with open(path) as fh:
            text = fh.read()
        spec = parse_spec(text)
        if args.order is not None:
            doc = spec.to_document()
            doc["order"] = args.order
            spec = parse_spec(json.dumps(doc))
        return spec, os.path.basename(path)
    raise SpecError("an input is required: --builtin NAME or --spec PATH")


def _notes_for(label):
    return demos.NOTES.get(label, ())


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_expand(args) -> int:
    spec, label = load_spec(args)
    if spec.klass == "difference":
        u2 = diffmod.u2_from_spec(spec)
        K, W = spec.order, spec.window
        band = W - K * u2.support_bound()
        if band < 0:
            raise SpecError("window too small for the requested order")
        ctx = diffmod.make_context(K, W)
        gk = diffmod.gk_poly(K)
        entries = [
            (m, diffmod.secular_windowed(u2, m, K, W, ctx, gk))
            for m in range(-band, band + 1)
        ]
        if args.format == "machine":
            payload = {
                "kind": "difference_table",
                "spec": spec.to_document(),
                "order": K,
                "band": band,
                "entries": [[m, poly_to_data(p)] for m, p in entries],
            }
            print(json.dumps(payload, indent=2))
            return 0
        print(f"# difference equation, order {K}, window {W} (t measured in units of pi)")
        for m, p in entries:
            print(f"P[{m}] = {p.render()}")
        return 0

    table = expand_table(spec, label=label)
    if args.format == "machine":
        print(json.dumps(table_to_machine(table), indent=2))
        return 0
    print(f"# {label}: class {spec.klass}, order {spec.order}")
    for note in _notes_for(label):
        print(f"# {note}")
    print(table.render())
    return 0


def _parse_pairs(src: str):
    pairs = []
    for chunk in src.split(","):
        a, _, b = chunk.partition(":")
        pairs.append((int(a) - 1, int(b) - 1))
    return pairs


def cmd_rg(args) -> int:
    spec, label = load_spec(args)
    if spec.klass == "difference":
        u2 = diffmod.u2_from_spec(spec)
        ctx = diffmod.make_context(spec.order, spec.window)
        theta = diffmod.theta_series(u2, spec.order, ctx)
        print(f"# {label}: amplitude flow  dA(zeta,t)/dt = (Theta(eps,zeta)/pi) * A(-zeta,t)")
        for l in theta.series.support():
            print(f"Theta[z^{l}] = {theta.series.entries[l].render()}")
        return 0
    table = expand_table(spec, label=label)
    rg = derive_rg(table)
    if args.format == "machine":
        print(json.dumps(rg_to_machine(spec, rg), indent=2))
        return 0
    print(f"# {label}: RG equation (amplitudes are renormalized)")
    for note in _notes_for(label):
        print(f"# {note}")
    print(rg.render())
    if spec.klass == "scalar":
        for name, n, rhs in rg.scalar_forms():
            print(f"d^{n}{name}/dt^{n} = {rhs.render()}")
    if args.polar:
        polar = polar_transform(rg, _parse_pairs(args.polar))
        print("# polar form")
        print(polar.render())
    if args.expansion:
        print(renormalized_expansion(table).render())
    if args.inversion:
        print("# inversion: bare amplitudes in terms of renormalized ones")
        for name, p in invert_amplitudes(table).items():
            print(f"{name}_bare = {p.render()}")
    return 0


def _numeric_smoke(table, rng) -> bool:
    """Redundant numeric spot-check of the functional relation.

    The identity holds mod eps^(K+1), so the numeric composition of the
    truncated polynomials leaves exactly the truncation tail: halving eps
    must shrink the residual by about 2^(K+1).  A genuine defect enters at
    some order <= K and scales more slowly.
    """
    ctx = table.ctx
    point = {name: complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
             for name in ctx.amplitudes}
    for name in ctx.params:
        point[name] = complex(rng.uniform(-1, 1), 0.0)
    t0, s0 = 0.7, 0.3
    amps = renormalized_amplitudes(table)
    comps = table.components if table.spec.klass != "scalar" else table.components[:1]

    def residual(eps0):
        renpoint = {
            name: amps[name].eval_complex({**point, "eps": eps0, "t": s0})
            for name in ctx.amplitudes
        }
        for name in ctx.params:
            renpoint[name] = point[name]
        worst = 0.0
        for comp in comps:
            for m, p in comp.entries.items():
                lhs = p.eval_complex({**point, "eps": eps0, "t": t0})
                rhs = p.eval_complex({**renpoint, "eps": eps0, "t": t0 - s0})
                worst = max(worst, abs(lhs - rhs))
        return worst

    d1, d2 = residual(0.2), residual(0.1)
    if d1 < 1e-9:
        return True
    return d1 / max(d2, 1e-300) > 0.6 * 2 ** (ctx.order + 1)


def cmd_verify(args) -> int:
    reports = []
    smoke_ok = True
    if args.random:
        seed = args.seed if args.seed is not None else 0
        spec = random_spec(args.random, seed)
        if args.order is not None:
            doc = spec.to_document()
            doc["order"] = args.order
            spec = parse_spec(json.dumps(doc))
        label = f"random-{args.random}-{seed}"
    else:
        spec, label = load_spec(args)

    if spec.klass == "difference":
        u2 = diffmod.u2_from_spec(spec)
        reports = diffmod.check_difference_identities(u2, spec.order, spec.window, label)
        flag = diffmod.stability_flag(u2, args.eps)
        for r in reports:
            print(r.line())
        print(
            f"INFO stability eps={flag['eps']}: Theta purely imaginary: "
            f"{flag['theta_purely_imaginary']}; |eps U| <= 1: {flag['eps_u_bounded_by_one']}"
        )
        return 0 if all(r.ok for r in reports) else 1

    table = expand_table(spec, label=label)
    if args.corrupt:
        table = corrupt_table(table)
    seed = args.seed if args.seed is not None else 0
    reports = run_all_checks(table, seed=seed)
    rng = random.Random(seed)
    smoke_ok = _numeric_smoke(table, rng)
    for r in reports:
        print(r.line())
        if r.applicable and not r.passed:
            detail = {"check": r.name, "spec": r.spec_id, "order": r.order,
                      "seed": r.seed, "detail": r.detail}
            print(json.dumps(detail))
    print(f"{'PASS' if smoke_ok else 'FAIL'} numeric_smoke [{table.label} K={table.order}]")
    return 0 if all(r.ok for r in reports) and smoke_ok else 1


def cmd_simulate(args) -> int:
    if not args.builtin and not args.spec:
        args.builtin = "ex_cd"
    spec, label = load_spec(args)
    outdir = args.out_dir
    os.makedirs(outdir, exist_ok=True)
    result = simulate_conjugate_pair(
        spec, args.eps, args.r0, args.theta0,
        t_end=args.t_end, dt=args.dt,
        rg_order=args.rg_order, ren_order=args.ren_order,
    )
    direct = result["direct"]
    polar = result["polar"]
    recon = result["reconstruction"]
    emit_csv(direct, os.path.join(outdir, f"{label}_direct.csv"))
    emit_csv(polar, os.path.join(outdir, f"{label}_rg_polar.csv"))
    emit_csv(recon, os.path.join(outdir, f"{label}_reconstruction.csv"))
    ts = list(direct.times)
    emit_svg(
        [("Re y1", ts, list(direct.component(0).real)),
         ("Im y1", ts, list(direct.component(0).imag))],
        os.path.join(outdir, f"{label}_direct.svg"),
        title=f"direct integration, eps={args.eps}",
    )
    emit_svg(
        [("R", ts, list(polar.component(0).real)),
         ("theta", ts, list(polar.component(1).real))],
        os.path.join(outdir, f"{label}_rg.svg"),
        title=f"RG flow (order eps^{args.rg_order})",
    )
    emit_svg(
        [("Re y1 (direct)", ts, list(direct.component(0).real)),
         ("Re Y1 (reconstruction)", ts, list(recon.component(0).real))],
        os.path.join(outdir, f"{label}_overlay.svg"),
        title=f"reconstruction overlay, eps={args.eps}",
    )
    print(f"initial y1 = {result['initial_state'][0]:.6f}")
    print(f"conjugate deviation sup|y2 - conj(y1)| = {result['conjugate_deviation']:.3e}")
    print(f"reconstruction deviation sup|Re y1 - Re Y1| = {result['reconstruction_deviation']:.3e}")
    print(f"artifacts written to {outdir}")
    return 0


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rgperturb",
        description="Renormalization-group perturbation engine for ODEs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, fmt=True):
        sp.add_argument("--builtin", choices=demos.builtin_names(),
                        help="built-in demonstration system")
        sp.add_argument("--spec", metavar="PATH", help="spec document (JSON)")
        sp.add_argument("--order", type=int, help="override the truncation order")
        if fmt:
            sp.add_argument("--format", choices=("text", "machine"), default="text")

    sp = sub.add_parser("expand", help="print the secular-coefficient table")
    common(sp)
    sp.set_defaults(func=cmd_expand)

    sp = sub.add_parser("rg", help="derive the RG equation and related objects")
    common(sp)
    sp.add_argument("--polar", metavar="P:Q[,P:Q]",
                    help="conjugate pairing, 1-based amplitude indices")
    sp.add_argument("--expansion", action="store_true",
                    help="also print the renormalized expansion")
    sp.add_argument("--inversion", action="store_true",
                    help="also print the bare-amplitude inversion")
    sp.set_defaults(func=cmd_rg)

    sp = sub.add_parser("verify", help="run the identity checks")
    common(sp, fmt=False)
    sp.add_argument("--random", choices=("semisimple", "nilpotent", "scalar"),
                    help="check a seeded random spec instead of an input")
    sp.add_argument("--seed", type=int, help="seed for randomized checks")
    sp.add_argument("--corrupt", action="store_true",
                    help="negative control: perturb one coefficient first")
    sp.add_argument("--eps", type=float, default=0.25,
                    help="eps for the difference-class stability report")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("simulate", help="direct vs RG-reconstructed integration")
    common(sp, fmt=False)
    sp.add_argument("--eps", type=float, default=0.25)
    sp.add_argument("--r0", type=float, default=1.3)
    sp.add_argument("--theta0", type=float, default=2.1)
    sp.add_argument("--t-end", type=float, default=40.0)
    sp.add_argument("--dt", type=float, default=0.01)
    sp.add_argument("--rg-order", type=int, default=4)
    sp.add_argument("--ren-order", type=int, default=2)
    sp.add_argument("--out-dir", default=os.environ.get("RGPERTURB_OUT", "."))
    sp.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SpecError, OSError, json.JSONDecodeError, diffmod.WindowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PolarPairingError as exc:
        print(f"error: polar pairing: {exc}", file=sys.stderr)
        return 3
    except NumericOverflowError as exc:
        print(f"error: numeric overflow: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
