"""Naive-perturbation engines for the three ODE classes.

Each engine builds, order by order in eps, the unique formal solution whose
harmonic coefficients satisfy the class's normalization:

* semisimple -- the resonant coefficient (component j, harmonic m_j) carries
  no t-constant term at eps-order >= 1;
* nilpotent  -- the harmonic-0 coefficients all vanish at t=0 for orders >= 1
  (after the internal e^{imt} gauge reduction when the block eigenvalue is
  nonzero);
* scalar     -- the resonant coefficient at harmonic m_r is divisible by
  t^{n_r} at every order >= 1.

The result is a SecularTable: per component (or per derivative slot for the
scalar class) a HarmonicSeries of secular coefficients, with resonance
metadata and the minimal eps-order per harmonic.
"""

from __future__ import annotations

from fractions import Fraction

from .gaussrat import GaussianRational
from .poly import (
    PolyContext,
    MultiPoly,
    HarmonicSeries,
    hs_pow,
    resolve_shift,
    EPS,
)
from .expressions import VPoly
from .systems import ODESystemSpec, SpecError


class SecularTable:
    """Secular coefficients P_{j,m}(eps,t,A) of one expansion."""

    def __init__(self, spec, ctx, components, resonant, label="", gauge_mode=0):
        self.spec = spec
        self.ctx = ctx
        self.components = components  # list[HarmonicSeries]
        self.resonant = resonant      # list[(component, harmonic)]
        self.label = label or spec.klass
        self.gauge_mode = gauge_mode  # nilpotent only: original block eigenvalue

    @property
    def order(self) -> int:
        return self.ctx.order

    def entry(self, j: int, m: int) -> MultiPoly:
        return self.components[j].get(m)

    def min_order(self, j: int, m: int):
        return self.components[j].get(m).min_eps_order()

    def min_orders(self) -> dict:
        out = {}
        for j, comp in enumerate(self.components):
            for m, p in comp.entries.items():
                out[(j, m)] = p.min_eps_order()
        return out

    def amplitude_polys(self) -> list:
        """The renormalized amplitudes as polynomials in (eps, t, A).

        Entry k corresponds to ctx.amplitudes[k].  For the scalar class these
        are the successive t-derivatives of the resonant coefficients.
        """
        spec = self.spec
        if spec.klass == "semisimple":
            return [self.components[j].get(m) for j, m in self.resonant]
        if spec.klass == "nilpotent":
            return [self.components[j].get(0) for j in range(spec.block_size)]
        if spec.klass == "scalar":
            out = []
            for m_r, n_r in spec.factors:
                p = self.components[0].get(m_r)
                for _ in range(n_r):
                    out.append(p)
                    p = p.diff_t()
            return out
        raise SpecError(f"no amplitudes for class {spec.klass!r}")

    def render(self) -> str:
        lines = []
        for j, comp in enumerate(self.components):
            for m in comp.support():
                lines.append(f"P[{j + 1},{m}] = {comp.entries[m].render()}")
        return "\n".join(lines)


def make_context(spec: ODESystemSpec) -> PolyContext:
    return PolyContext(spec.amplitude_names, spec.params, spec.order)


def eval_vpoly_hs(vp: VPoly, comps, ctx: PolyContext, trunc: int, cache=None) -> HarmonicSeries:
    """Evaluate a forcing polynomial with states bound to harmonic series."""
    if cache is None:
        cache = {}

    def state_pow(j, e):
        key = (j, e)
        p = cache.get(key)
        if p is None:
            p = hs_pow(comps[j], e, trunc)
            cache[key] = p
        return p

    out = HarmonicSeries.zero(ctx)
    poff = 3 + len(ctx.amplitudes)
    for (k, l, se, pe), c in vp.terms.items():
        if k > trunc:
            continue
        exps = [0] * ctx.nvars
        exps[EPS] = k
        for idx, e in enumerate(pe):
            exps[poff + idx] = e
        hs = HarmonicSeries.single(l, ctx.monomial(c, exps))
        for j, e in enumerate(se):
            if e:
                hs = hs.mul(state_pow(j, e), trunc)
        out = out + hs
    return out


def _forcing_layers(v_polys, comps, ctx, k) -> list:
    """Per component, the eps^(k-1) layer of V evaluated on the current table."""
    cache = {}
    return [
        eval_vpoly_hs(vp, comps, ctx, k - 1, cache).eps_coeff(k - 1)
        for vp in v_polys
    ]


# --------------------------------------------------------------------------
# Semisimple class
# --------------------------------------------------------------------------

def expand_semisimple(spec: ODESystemSpec, label="") -> SecularTable:
    if spec.klass != "semisimple":
        raise SpecError("expand_semisimple needs a semisimple spec")
    ctx = make_context(spec)
    n = len(spec.modes)
    comps = [
        HarmonicSeries.single(spec.modes[j], ctx.var(spec.amplitude_names[j]))
        for j in range(n)
    ]
    eps = ctx.var("eps")
    for k in range(1, spec.order + 1):
        layers = _forcing_layers(spec.v_polys, comps, ctx, k)
        epsk = eps ** k
        for j in range(n):
            mj = spec.modes[j]
            add = {}
            for m, rhs in layers[j].entries.items():
                if m == mj:
                    p = rhs.antidiff_t()
                else:
                    p = resolve_shift(GaussianRational(0, m - mj), rhs)
                if not p.is_zero():
                    add[m] = p * epsk
            comps[j] = comps[j] + HarmonicSeries(ctx, add)
    resonant = [(j, spec.modes[j]) for j in range(n)]
    return SecularTable(spec, ctx, comps, resonant, label=label)


# --------------------------------------------------------------------------
# Nilpotent class
# --------------------------------------------------------------------------

def gauge_reduce_nilpotent(vp: VPoly, m: int) -> VPoly:
    """E^{-m} V(eps, E, y -> E^m y): removes the i*m*Id part of the block."""
    if m == 0:
        return vp
    out = {}
    for (k, l, se, pe), c in vp.terms.items():
        out[(k, l + m * (sum(se) - 1), se, pe)] = c
    return VPoly(vp.nstates, vp.nparams, out)


def unperturbed_chain(ctx: PolyContext, names) -> list:
    """The polynomial chain d^{j-1}g/dt^{j-1}, g = sum_k A_k t^{k-1}/(k-1)!."""
    n = len(names)
    out = []
    for j in range(1, n + 1):
        p = ctx.zero()
        fact = 1
        for k in range(j, n + 1):
            p = p + (ctx.var(names[k - 1]) * ctx.var("t", k - j)).scale(Fraction(1, fact))
            fact *= (k - j + 1)
        out.append(p)
    return out


def expand_nilpotent(spec: ODESystemSpec, label="") -> SecularTable:
    if spec.klass != "nilpotent":
        raise SpecError("expand_nilpotent needs a nilpotent spec")
    ctx = make_context(spec)
    n = spec.block_size
    v_polys = [gauge_reduce_nilpotent(vp, spec.block_mode) for vp in spec.v_polys]
    chain = unperturbed_chain(ctx, spec.amplitude_names)
    comps = [HarmonicSeries.single(0, chain[j]) for j in range(n)]
    eps = ctx.var("eps")
    for k in range(1, spec.order + 1):
        layers = _forcing_layers(v_polys, comps, ctx, k)
        harmonics = sorted({m for lay in layers for m in lay.entries})
        epsk = eps ** k
        new = [dict() for _ in range(n)]
        for m in harmonics:
            below = ctx.zero()  # P_{j+1,m} for the component just solved
            for j in range(n - 1, -1, -1):
                rhs = layers[j].get(m) + below
                if m:
                    p = resolve_shift(GaussianRational(0, m), rhs)
                else:
                    p = rhs.antidiff_t()
                below = p
                if not p.is_zero():
                    new[j][m] = p * epsk
        for j in range(n):
            comps[j] = comps[j] + HarmonicSeries(ctx, new[j])
    resonant = [(j, 0) for j in range(n)]
    return SecularTable(
        spec, ctx, comps, resonant, label=label, gauge_mode=spec.block_mode
    )


# --------------------------------------------------------------------------
# Scalar class
# --------------------------------------------------------------------------

def expand_scalar(spec: ODESystemSpec, label="") -> SecularTable:
    if spec.klass != "scalar":
        raise SpecError("expand_scalar needs a scalar spec")
    ctx = make_context(spec)
    N = spec.n_states
    names = spec.amplitude_names
    entries = {}
    pos = 0
    for m_r, n_r in spec.factors:
        h = ctx.zero()
        fact = 1
        for j in range(1, n_r + 1):
            h = h + (ctx.var(names[pos + j - 1]) * ctx.var("t", j - 1)).scale(Fraction(1, fact))
            fact *= j
        entries[m_r] = h
        pos += n_r
    slots = [HarmonicSeries(ctx, entries)]
    for _ in range(N - 1):
        slots.append(slots[-1].time_derivative())

    eps = ctx.var("eps")
    for k in range(1, spec.order + 1):
        cache = {}
        layer = eval_vpoly_hs(spec.v_polys[0], slots, ctx, k - 1, cache).eps_coeff(k - 1)
        new0 = {}
        for m, rhs in layer.entries.items():
            w = rhs
            res_mult = 0
            for m_r, n_r in spec.factors:
                if m == m_r:
                    res_mult = n_r
                    continue
                c = GaussianRational(0, m - m_r)
                for _ in range(n_r):
                    w = resolve_shift(c, w)
            for _ in range(res_mult):
                w = w.antidiff_t()
            if not w.is_zero():
                new0[m] = w * (eps ** k)
        part = HarmonicSeries(ctx, new0)
        for l in range(N):
            slots[l] = slots[l] + part
            if l + 1 < N:
                part = part.time_derivative()

    resonant = [(0, m_r) for m_r, _ in spec.factors]
    return SecularTable(spec, ctx, slots, resonant, label=label)


def expand_table(spec: ODESystemSpec, label="") -> SecularTable:
    if spec.klass == "semisimple":
        return expand_semisimple(spec, label)
    if spec.klass == "nilpotent":
        return expand_nilpotent(spec, label)
    if spec.klass == "scalar":
        return expand_scalar(spec, label)
    raise SpecError(f"no expansion engine for class {spec.klass!r}")


# --------------------------------------------------------------------------
# Governing-equation residuals (used by the identity checks)
# --------------------------------------------------------------------------

def _eps_times(ctx, hs: HarmonicSeries) -> HarmonicSeries:
    eps = ctx.var("eps")
    return hs.map_entries(lambda p: p * eps)


def table_residuals(table: SecularTable) -> list:
    """Substitute the table back into its governing equation.

    Returns one HarmonicSeries per equation component (plus, for the scalar
    class, one per derivative-slot consistency relation); all are identically
    zero mod eps^(K+1) precisely when the table solves the equation.
    """
    spec = table.spec
    ctx = table.ctx
    comps = table.components
    K = ctx.order
    if spec.klass == "semisimple":
        cache = {}
        out = []
        for j, vp in enumerate(spec.v_polys):
            w = eval_vpoly_hs(vp, comps, ctx, K - 1, cache) if K else HarmonicSeries.zero(ctx)
            rhs = _eps_times(ctx, w)
            lin = comps[j].map_entries(lambda p, c=GaussianRational(0, spec.modes[j]): p.scale(c))
            out.append(comps[j].time_derivative() - lin - rhs)
        return out
    if spec.klass == "nilpotent":
        v_polys = [gauge_reduce_nilpotent(vp, spec.block_mode) for vp in spec.v_polys]
        n = spec.block_size
        cache = {}
        out = []
        for j in range(n):
            w = eval_vpoly_hs(v_polys[j], comps, ctx, K - 1, cache) if K else HarmonicSeries.zero(ctx)
            rhs = _eps_times(ctx, w)
            above = comps[j + 1] if j + 1 < n else HarmonicSeries.zero(ctx)
            out.append(comps[j].time_derivative() - above - rhs)
        return out
    if spec.klass == "scalar":
        cache = {}
        w = eval_vpoly_hs(spec.v_polys[0], comps, ctx, K - 1, cache) if K else HarmonicSeries.zero(ctx)
        rhs = _eps_times(ctx, w)
        op = comps[0]
        for m_r, n_r in spec.factors:
            c = GaussianRational(0, m_r)
            for _ in range(n_r):
                op = op.time_derivative() - op.map_entries(lambda p: p.scale(c))
        out = [op - rhs]
        for l in range(len(comps) - 1):
            out.append(comps[l].time_derivative() - comps[l + 1])
        return out
    raise SpecError(f"no residual for class {spec.klass!r}")


def gauge_reduce_semisimple(spec: ODESystemSpec) -> ODESystemSpec:
    """The equivalent M=0 system for y_j -> e^{-i m_j t} y_j.

    Expanding it gives a table related to the original by the harmonic shift
    m -> m + m_j per component; used as an engine cross-check.
    """
    if spec.klass != "semisimple":
        raise SpecError("gauge_reduce_semisimple needs a semisimple spec")
    modes = spec.modes
    new_polys = []
    for j, vp in enumerate(spec.v_polys):
        out = {}
        for (k, l, se, pe), c in vp.terms.items():
            shift = sum(e * m for e, m in zip(se, modes)) - modes[j]
            key = (k, l + shift, se, pe)
            out[key] = out.get(key, GaussianRational(0)) + c
        new_polys.append(VPoly(vp.nstates, vp.nparams, {e: c for e, c in out.items() if not c.is_zero()}))
    new = ODESystemSpec(
        klass="semisimple",
        order=spec.order,
        params=spec.params,
        modes=tuple(0 for _ in modes),
        amplitude_names=spec.amplitude_names,
    )
    new.v_polys = new_polys
    new.v_srcs = tuple(vp.render(spec.state_names, spec.params) for vp in new_polys)
    return new
