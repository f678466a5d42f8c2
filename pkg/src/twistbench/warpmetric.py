"""Construction of the doubly warped profile functions.

The profile consists of two warping functions f (the sphere factor) and
h (the circle factor) on an interval [s_left, s_lambda], built in four
stages:

* ``integrate_core`` solves f'' = (alpha lam0^2 / 2) f^(-alpha-1) with
  f(0) = 1, f'(0) = 0 and stops where f' reaches the target slope; h is
  a fixed multiple of f' there, so the conserved first integral
  f'^2 = lam0^2 (1 - f^(-alpha)) doubles as an accuracy monitor.
* ``cap_sine`` replaces the outer end of f by an exact sine arc
  N sin((s - s')/N), blending second derivatives so the three curvature
  inequalities keep their margins.
* ``flatten_h_tail`` multiplies h' by a cutoff so every tracked
  derivative of h vanishes at the outer end.
* ``smooth_origin`` rescales h by r, splices an exact sine with unit
  slope at the new left endpoint, and flattens f to a constant there,
  rejoining the core solution exactly so the first integral survives.

All blending happens in second-derivative space with quintic smoothstep
weights, which keeps the inequality margins one-signed; margins are
re-evaluated after every stage and a lost margin raises ``MarginLost``
instead of silently degrading the certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InputError, MarginLost, NoSolution, NoStop


# ---------------------------------------------------------------------------
# Smoothstep helpers (C^2 at both ends)
# ---------------------------------------------------------------------------

def smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def smoothstep_d(u):
    u = np.asarray(u, dtype=float)
    inside = (u > 0.0) & (u < 1.0)
    out = np.zeros_like(u)
    ui = u[inside]
    out[inside] = 30.0 * ui * ui * (1.0 - ui) ** 2
    return out


def _default_cap_width(n, lam, lam0, alpha, f_stop, s_est):
    """Slope-budget-aware default width of the outer cap.

    The sine arc and the curvature blend each consume part of the slope
    gap lam0 - lam; keeping that consumption to a percent of the gap
    keeps the arc scale N within a fraction of f(s_lambda)/sqrt(1-lam^2)
    and keeps the blend inside the region where the core identities
    control the inequality margins.
    """
    big_n0 = f_stop / math.sqrt(1.0 - lam * lam)
    fpp_stop = 0.5 * alpha * lam0**2 * f_stop ** (-alpha - 1.0)
    sine_curv = (1.0 - lam * lam) / f_stop
    sine_zone = 0.005 * (lam0 - lam) * big_n0 / math.sqrt(1.0 - lam * lam)
    blend_zone = 0.01 * (lam0 - lam) / max(sine_curv - fpp_stop, 0.1 * sine_curv)
    return 2.0 * min(sine_zone, blend_zone, 0.25, 0.15 * s_est)


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WarpParams:
    """Construction parameters; None fields are resolved to defaults.

    lam is the target outer slope of f (the cosine of the gluing
    radius), lam0 the asymptotic slope of the core solution, alpha the
    core exponent.  The open-interval conditions lam in (0,1),
    lam0 in (lam, 1) and alpha in (n-2, (n-2)/lam0^2) are enforced
    strictly.
    """

    n: int
    lam: float
    lam0: float | None = None
    alpha: float | None = None
    cap_width: float | None = None
    tail_width: float | None = None
    origin_eps: float | None = None
    step: float | None = None
    s_budget: float | None = None
    tol_ode: float = 1e-9

    def resolve(self) -> "WarpParams":
        if self.n < 3:
            raise InputError("need dimension n >= 3")
        if not 0.0 < self.lam < 1.0:
            raise InputError("lam must lie strictly in (0, 1)")
        lam0 = self.lam0 if self.lam0 is not None else 0.5 * (self.lam + 1.0)
        if not self.lam < lam0 < 1.0:
            raise InputError("lam0 must lie strictly in (lam, 1)")
        hi = (self.n - 2) / lam0**2
        alpha = self.alpha if self.alpha is not None else 0.5 * ((self.n - 2) + hi)
        if not self.n - 2 < alpha < hi:
            raise InputError("alpha must lie strictly in (n-2, (n-2)/lam0^2)")
        # Closed-form stop estimate from the first integral.
        f_stop = (1.0 - self.lam**2 / lam0**2) ** (-1.0 / alpha)
        s_est = (f_stop - 1.0) / lam0 + 2.0 / (lam0 * math.sqrt(alpha)) + 0.5
        step = self.step if self.step is not None else min(0.01, s_est / 800.0)
        budget = self.s_budget if self.s_budget is not None else 4.0 * s_est + 10.0
        cap = self.cap_width if self.cap_width is not None else _default_cap_width(
            self.n, self.lam, lam0, alpha, f_stop, s_est
        )
        eps = self.origin_eps if self.origin_eps is not None else min(1.0, 0.3 * s_est)
        return replace(
            self,
            lam0=lam0,
            alpha=alpha,
            cap_width=cap,
            origin_eps=eps,
            step=step,
            s_budget=budget,
        )


# ---------------------------------------------------------------------------
# Dense curves (uniform grid + cubic Hermite evaluation)
# ---------------------------------------------------------------------------

class _DenseCurve:
    """Cubic Hermite interpolant on a uniform grid of (value, slope) nodes."""

    def __init__(self, s0: float, step: float, values, slopes):
        self.s0 = float(s0)
        self.step = float(step)
        self.values = np.asarray(values, dtype=float)
        self.slopes = np.asarray(slopes, dtype=float)

    @property
    def s_end(self) -> float:
        return self.s0 + self.step * (len(self.values) - 1)

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        x = np.clip((s - self.s0) / self.step, 0.0, len(self.values) - 1.0)
        k = np.clip(np.floor(x).astype(int), 0, len(self.values) - 2)
        t = x - k
        # snap to nodes so junction evaluations are exact
        t = np.where(np.abs(t) < 1e-9, 0.0, np.where(np.abs(t - 1.0) < 1e-9, 1.0, t))
        y0, y1 = self.values[k], self.values[k + 1]
        d0, d1 = self.slopes[k] * self.step, self.slopes[k + 1] * self.step
        t2, t3 = t * t, t * t * t
        return (
            (1 - 3 * t2 + 2 * t3) * y0
            + (t - 2 * t2 + t3) * d0
            + (3 * t2 - 2 * t3) * y1
            + (t3 - t2) * d1
        )


def _cumulative_trapezoid(y, step):
    out = np.empty_like(y)
    out[0] = 0.0
    np.cumsum(0.5 * step * (y[1:] + y[:-1]), out=out[1:])
    return out


def _trapz(y, step):
    return float(np.sum(0.5 * step * (y[1:] + y[:-1])))


# ---------------------------------------------------------------------------
# Core ODE solution
# ---------------------------------------------------------------------------

class _CoreSolution:
    """Fixed-step RK4 solution of the core equation, extendable on demand."""

    def __init__(self, lam0: float, alpha: float, step: float):
        self.lam0 = lam0
        self.alpha = alpha
        self.step = step
        self.c2 = 0.5 * alpha * lam0 * lam0
        self._f = [1.0]
        self._fp = [0.0]
        self._arrays = None

    def fpp_of(self, f):
        return self.c2 * np.power(f, -self.alpha - 1.0)

    @property
    def s_end(self) -> float:
        return self.step * (len(self._f) - 1)

    def extend(self, s_target: float):
        changed = False
        h = self.step
        f, fp = self._f[-1], self._fp[-1]
        while self.s_end < s_target:
            k1v, k1s = fp, self.c2 * f ** (-self.alpha - 1.0)
            f2 = f + 0.5 * h * k1v
            k2v, k2s = fp + 0.5 * h * k1s, self.c2 * f2 ** (-self.alpha - 1.0)
            f3 = f + 0.5 * h * k2v
            k3v, k3s = fp + 0.5 * h * k2s, self.c2 * f3 ** (-self.alpha - 1.0)
            f4 = f + h * k3v
            k4v, k4s = fp + h * k3s, self.c2 * f4 ** (-self.alpha - 1.0)
            f = f + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
            fp = fp + (h / 6.0) * (k1s + 2 * k2s + 2 * k3s + k4s)
            self._f.append(f)
            self._fp.append(fp)
            changed = True
        if changed:
            self._arrays = None

    def _curves(self):
        if self._arrays is None:
            f = np.array(self._f)
            fp = np.array(self._fp)
            fcurve = _DenseCurve(0.0, self.step, f, fp)
            fpcurve = _DenseCurve(0.0, self.step, fp, self.fpp_of(f))
            self._arrays = (f, fp, fcurve, fpcurve)
        return self._arrays

    def eval(self, s):
        """(f, f', f'') at the given locations."""
        _, _, fcurve, fpcurve = self._curves()
        f = fcurve(s)
        fp = fpcurve(s)
        return f, fp, self.fpp_of(f)

    def first_integral_residual(self, s_hi: float) -> float:
        f, fp, _, _ = self._curves()
        k = int(math.floor(s_hi / self.step)) + 1
        f, fp = f[:k], fp[:k]
        res = fp * fp - self.lam0**2 * (1.0 - np.power(f, -self.alpha))
        return float(np.max(np.abs(res))) if len(res) else 0.0

    def extend_until_slope(self, target: float, budget: float):
        while self._fp[-1] < target:
            if self.s_end >= budget:
                raise NoStop(f"slope {target} not reached by s = {budget}")
            self.extend(min(self.s_end + 200 * self.step, budget))

    def find_slope(self, target: float) -> float:
        """Location where f' crosses ``target`` (f' is increasing)."""
        _, fp, _, fpcurve = self._curves()
        idx = int(np.searchsorted(fp, target))
        if idx <= 0:
            return 0.0
        if idx >= len(fp):
            raise NoStop("slope target outside the integrated range")
        lo, hi = (idx - 1) * self.step, idx * self.step
        for _ in range(120):
            mid = 0.5 * (lo + hi)
            if fpcurve(mid) < target:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-16 * max(1.0, hi):
                break
        return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# f- and h-models (per-segment function descriptions)
# ---------------------------------------------------------------------------

class _CoreF:
    constant = False

    def __init__(self, core):
        self.core = core

    def eval(self, s):
        return self.core.eval(s)


class _FlatF:
    constant = True

    def __init__(self, value):
        self.value = value

    def eval(self, s):
        s = np.asarray(s, dtype=float)
        z = np.zeros_like(s)
        return np.full_like(s, self.value), z, z


class _SineF:
    """f = N sin((s - s')/N)."""

    constant = False

    def __init__(self, big_n, s_prime):
        self.big_n = big_n
        self.s_prime = s_prime

    def eval(self, s):
        s = np.asarray(s, dtype=float)
        th = (s - self.s_prime) / self.big_n
        f = self.big_n * np.sin(th)
        return f, np.cos(th), -np.sin(th) / self.big_n


class _BlendCapF:
    """Dense blend between the core equation and sine curvature."""

    constant = False

    def __init__(self, curve_f, curve_fp, rhs):
        self.curve_f = curve_f
        self.curve_fp = curve_fp
        self.rhs = rhs

    def eval(self, s):
        f = self.curve_f(s)
        fp = self.curve_fp(s)
        return f, fp, self.rhs(s, f)


class _OriginBlendF:
    """Dense f with prescribed second derivative omega(s) * f''_core(s)."""

    constant = False

    def __init__(self, curve_f, curve_fp, fpp_func):
        self.curve_f = curve_f
        self.curve_fp = curve_fp
        self.fpp_func = fpp_func

    def eval(self, s):
        return self.curve_f(s), self.curve_fp(s), self.fpp_func(s)


class _CoreH:
    """h = scale * (2/(alpha lam0^2)) f', with the core identities.

    The ratio forms used by the inequalities are scale-free:
    h''/h = -(alpha (alpha+1)/2) lam0^2 f^(-alpha-2) and
    h'/h = f^(-alpha-1) / (C f') with C = 2/(alpha lam0^2).
    """

    kind = "core"

    def __init__(self, core, scale=1.0):
        self.core = core
        self.scale = scale
        self.c_h = 2.0 / (core.alpha * core.lam0**2)

    def rescaled(self, r):
        return _CoreH(self.core, self.scale * r)

    def eval(self, s):
        a = self.core.alpha
        f, fp, _ = self.core.eval(s)
        h = self.c_h * fp
        hp = np.power(f, -a - 1.0)
        hpp = -(a + 1.0) * np.power(f, -a - 2.0) * fp
        return self.scale * h, self.scale * hp, self.scale * hpp

    def hpp_over_h(self, s):
        a = self.core.alpha
        f, _, _ = self.core.eval(s)
        return -0.5 * a * (a + 1.0) * self.core.lam0**2 * np.power(f, -a - 2.0)

    def hp_over_h(self, s):
        a = self.core.alpha
        f, fp, _ = self.core.eval(s)
        return np.power(f, -a - 1.0) / (self.c_h * fp)

    def fp_hp_over_f_h(self, s):
        # The combination f'h'/(f h) in closed form; finite down to s = 0.
        a = self.core.alpha
        f, _, _ = self.core.eval(s)
        return 0.5 * a * self.core.lam0**2 * np.power(f, -a - 2.0)


class _SpliceH:
    """h = R sin((s - eps')/R); already includes the r-rescale."""

    kind = "splice"

    def __init__(self, radius, eps_prime, scale=1.0):
        self.radius = radius
        self.eps_prime = eps_prime
        self.scale = scale  # kept for uniformity; radius already has r in it

    def rescaled(self, r):
        raise InputError("splice segments are built after the rescale")

    def eval(self, s):
        s = np.asarray(s, dtype=float)
        th = (s - self.eps_prime) / self.radius
        h = self.radius * np.sin(th)
        return h, np.cos(th), -np.sin(th) / self.radius

    def hpp_over_h(self, s):
        s = np.asarray(s, dtype=float)
        return np.full_like(s, -1.0 / self.radius**2)

    def hp_over_h(self, s):
        raise InputError("h'/h is singular at the splice origin; f is flat here")


class _DenseH:
    """Sampled h with analytic second derivative (tail and kink pieces)."""

    kind = "dense"

    def __init__(self, curve_h, curve_hp, hpp_func, scale=1.0):
        self.curve_h = curve_h
        self.curve_hp = curve_hp
        self.hpp_func = hpp_func
        self.scale = scale

    def rescaled(self, r):
        return _DenseH(self.curve_h, self.curve_hp, self.hpp_func, self.scale * r)

    def eval(self, s):
        return (
            self.scale * self.curve_h(s),
            self.scale * self.curve_hp(s),
            self.scale * self.hpp_func(s),
        )

    def hpp_over_h(self, s):
        return self.hpp_func(s) / self.curve_h(s)

    def hp_over_h(self, s):
        return self.curve_hp(s) / self.curve_h(s)


# ---------------------------------------------------------------------------
# Profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    label: str  # core | cap | tail | splice | flat
    s0: float
    s1: float
    fmod: object
    hmod: object


@dataclass(frozen=True)
class CapInfo:
    big_n: float
    s_prime: float
    blend_start: float
    blend_end: float


@dataclass(frozen=True)
class TailInfo:
    start: float
    width: float


@dataclass(frozen=True)
class OriginInfo:
    radius: float
    eps_prime: float
    splice_point: float
    kink_halfwidth: float
    flat_end: float
    rejoin: float
    flat_value: float
    plateau: float


@dataclass(frozen=True)
class WarpProfile:
    """Piecewise description of (f, h) plus stage metadata."""

    params: WarpParams
    core: _CoreSolution
    segments: tuple
    s_left: float
    s_lambda: float
    r: float = 1.0
    cap: CapInfo | None = None
    tail: TailInfo | None = None
    origin: OriginInfo | None = None

    # -- sampling ----------------------------------------------------------
    def segment_grid(self, seg: Segment, refine: int = 1) -> np.ndarray:
        step = self.params.step / refine
        count = max(32, int(math.ceil((seg.s1 - seg.s0) / step)))
        return np.linspace(seg.s0, seg.s1, count + 1)

    def sample(self, refine: int = 1):
        """Rows of (label, s, f, fp, fpp, h, hp, hpp) per segment."""
        out = []
        for seg in self.segments:
            s = self.segment_grid(seg, refine)
            f, fp, fpp = seg.fmod.eval(s)
            h, hp, hpp = seg.hmod.eval(s)
            out.append((seg, s, f, fp, fpp, h, hp, hpp))
        return out

    def evaluate(self, s: float):
        """(f, fp, fpp, h, hp, hpp) at a single location."""
        for seg in self.segments:
            if seg.s0 - 1e-12 <= s <= seg.s1 + 1e-12:
                arr = np.array([s])
                f, fp, fpp = seg.fmod.eval(arr)
                h, hp, hpp = seg.hmod.eval(arr)
                return (
                    float(f[0]), float(fp[0]), float(fpp[0]),
                    float(h[0]), float(hp[0]), float(hpp[0]),
                )
        raise InputError(f"location {s} outside the profile domain")

    def first_integral_residual(self) -> float:
        """Max first-integral residual over the untouched core range."""
        lo = self.origin.rejoin if self.origin else self.s_left
        hi = self.cap.blend_start if self.cap else self.s_lambda
        s = np.linspace(lo, hi, 2049)
        f, fp, _ = self.core.eval(s)
        res = fp * fp - self.params.lam0**2 * (1.0 - np.power(f, -self.params.alpha))
        return float(np.max(np.abs(res)))

    def seam_residuals(self) -> list:
        """C^1 mismatches of f and h at every interior junction."""
        out = []
        for left, right in zip(self.segments, self.segments[1:]):
            s = left.s1
            fl = left.fmod.eval(np.array([s]))
            fr = right.fmod.eval(np.array([s]))
            hl = left.hmod.eval(np.array([s]))
            hr = right.hmod.eval(np.array([s]))
            out.append(
                (
                    s,
                    abs(fl[0][0] - fr[0][0]),
                    abs(fl[1][0] - fr[1][0]),
                    abs(hl[0][0] - hr[0][0]),
                    abs(hl[1][0] - hr[1][0]),
                )
            )
        return out


# ---------------------------------------------------------------------------
# Margins
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MarginReport:
    """Pointwise margins of the three inequalities plus their minima.

    The scalar minima run over the strict zone (everything left of the
    flattened seam collar): the tail brings every h-derivative to zero
    at the outer boundary, so inequality (3) closes to zero there by
    construction and the collar is certified nonnegative instead
    (``tail_min``); strictness across the seam is the cited deformation
    step, recorded as an annotation rather than computed.
    """

    blocks: tuple  # (label, s, m1, m2, m3) per segment
    min1: float
    min2: float
    min3: float
    tail_min: float = math.inf

    @property
    def global_min(self) -> float:
        return min(self.min1, self.min2, self.min3)

    @property
    def tail_nonnegative(self) -> bool:
        return self.tail_min >= -1e-12


def _segment_margins(n: int, seg: Segment, s: np.ndarray):
    fmod, hmod = seg.fmod, seg.hmod
    f, fp, fpp = fmod.eval(s)
    if fmod.constant:
        # f' = f'' = 0: the inequalities collapse to -h''/h and (n-2)/f^2.
        roh = hmod.hpp_over_h(s)
        m1 = -roh
        m2 = (n - 2) / (f * f)
        m3 = -roh
        return m1, m2, m3
    if isinstance(fmod, _CoreF) and isinstance(hmod, _CoreH):
        # Pure core: use the closed-form ratio identities (finite down to s = 0).
        roh = hmod.hpp_over_h(s)
        cross = hmod.fp_hp_over_f_h(s)
        m1 = -(n - 1) * fpp / f - roh
        m2 = -fpp / f + (n - 2) * (1.0 - fp * fp) / (f * f) - cross
        m3 = -roh - (n - 1) * cross
        return m1, m2, m3
    roh = hmod.hpp_over_h(s)
    rph = hmod.hp_over_h(s)
    cross = fp * rph / f
    m1 = -(n - 1) * fpp / f - roh
    m2 = -fpp / f + (n - 2) * (1.0 - fp * fp) / (f * f) - cross
    m3 = -roh - (n - 1) * cross
    return m1, m2, m3


def inequality_margins(w: WarpProfile, refine: int = 1) -> MarginReport:
    """Evaluate the three differential inequalities over the profile."""
    n = w.params.n
    blocks = []
    mins = [math.inf, math.inf, math.inf]
    tail_min = math.inf
    for seg in w.segments:
        s = w.segment_grid(seg, refine)
        m1, m2, m3 = _segment_margins(n, seg, s)
        blocks.append((seg.label, s, m1, m2, m3))
        worst = min(float(np.min(m1)), float(np.min(m2)), float(np.min(m3)))
        if seg.label == "tail":
            tail_min = min(tail_min, worst)
        else:
            mins[0] = min(mins[0], float(np.min(m1)))
            mins[1] = min(mins[1], float(np.min(m2)))
            mins[2] = min(mins[2], float(np.min(m3)))
    return MarginReport(tuple(blocks), mins[0], mins[1], mins[2], tail_min)


def _check_margins(w: WarpProfile, lo: float, hi: float, stage: str):
    n = w.params.n
    for seg in w.segments:
        if seg.s1 <= lo or seg.s0 >= hi:
            continue
        s = w.segment_grid(seg)
        s = s[(s >= lo - 1e-12) & (s <= hi + 1e-12)]
        if len(s) == 0:
            continue
        m1, m2, m3 = _segment_margins(n, seg, s)
        worst = min(float(np.min(m1)), float(np.min(m2)), float(np.min(m3)))
        floor = -1e-12 if seg.label == "tail" else 0.0
        if worst <= floor:
            raise MarginLost(
                f"{stage}: inequality margin {worst:.3e} lost on "
                f"segment {seg.label} [{seg.s0:.6g}, {seg.s1:.6g}]"
            )


# ---------------------------------------------------------------------------
# Stage 1: core integration
# ---------------------------------------------------------------------------

def integrate_core(params: WarpParams) -> WarpProfile:
    """Solve the core equation and stop where f' reaches lam.

    The step size is halved (up to four times) until the first-integral
    residual at the accepted nodes is within ``tol_ode``.  Raises NoStop
    if the slope target is not reached inside the budget.
    """
    p = params.resolve()
    step = p.step
    core = None
    for _ in range(5):
        core = _CoreSolution(p.lam0, p.alpha, step)
        while True:
            core.extend(min(core.s_end + 200 * step, p.s_budget))
            if core._fp[-1] >= p.lam:
                break
            if core.s_end >= p.s_budget:
                raise NoStop(
                    f"f' stayed below {p.lam} up to s = {p.s_budget}; "
                    "check lam against lam0"
                )
        if core.first_integral_residual(core.s_end) <= p.tol_ode:
            break
        step *= 0.5
    else:
        raise NoStop("integrator failed to meet the first-integral tolerance")
    p = replace(p, step=step)
    s_stop = core.find_slope(p.lam)
    seg = Segment("core", 0.0, s_stop, _CoreF(core), _CoreH(core))
    return WarpProfile(
        params=p, core=core, segments=(seg,), s_left=0.0, s_lambda=s_stop
    )


# ---------------------------------------------------------------------------
# Stage 2: sine cap
# ---------------------------------------------------------------------------

def _integrate_blend(core, a, b, big_n, steps=512):
    """RK4 for f'' = (1-sig) c2 f^(-alpha-1) - sig f/N^2 on [a, b]."""
    c2, alpha = core.c2, core.alpha
    width = b - a

    def sig(s):
        return float(smoothstep((s - a) / width))

    def acc(s, f):
        w = sig(s)
        return (1.0 - w) * c2 * f ** (-alpha - 1.0) - w * f / (big_n * big_n)

    h = width / steps
    f0, fp0, _ = core.eval(np.array([a]))
    f, fp = float(f0[0]), float(fp0[0])
    fs, fps = [f], [fp]
    s = a
    for _ in range(steps):
        k1v, k1a = fp, acc(s, f)
        k2v, k2a = fp + 0.5 * h * k1a, acc(s + 0.5 * h, f + 0.5 * h * k1v)
        k3v, k3a = fp + 0.5 * h * k2a, acc(s + 0.5 * h, f + 0.5 * h * k2v)
        k4v, k4a = fp + h * k3a, acc(s + h, f + h * k3v)
        f += (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        fp += (h / 6.0) * (k1a + 2 * k2a + 2 * k3a + k4a)
        s += h
        fs.append(f)
        fps.append(fp)
    return np.array(fs), np.array(fps), h


def cap_sine(w: WarpProfile, lam: float, width: float) -> WarpProfile:
    """Blend f into an exact sine arc ending with slope lam.

    The blend interpolates second derivatives from the core equation to
    sine curvature -f/N^2 over the first half of ``width``; N is solved
    so that the post-blend arc has amplitude exactly N, making the
    terminal piece N sin((s - s')/N) with f'(s_lambda) = lam and
    N = f(s_lambda) / sqrt(1 - lam^2) holding identically.
    """
    p = w.params
    if w.cap is not None:
        raise InputError("cap already applied")
    if abs(lam - p.lam) > 1e-12:
        raise InputError("cap slope must match the profile's lam")
    if width <= 0:
        raise InputError("cap width must be positive")
    blend_w = 0.5 * width
    sine_target = 0.5 * width
    s_stop = w.s_lambda
    core = w.core
    core.extend(s_stop + 4.0 * width + 4.0 * p.step)
    f_at_stop = float(core.eval(np.array([s_stop]))[0][0])
    n0 = f_at_stop / math.sqrt(1.0 - lam * lam)
    slope_target = lam + math.sqrt(1.0 - lam * lam) * sine_target / n0
    if slope_target >= p.lam0 - 0.02 * (p.lam0 - p.lam):
        raise MarginLost("cap width too large for the gap between lam and lam0")

    def solve_big_n(a, b):
        def amp_gap(big_n):
            fs, fps, _ = _integrate_blend(core, a, b, big_n)
            amp = math.hypot(fs[-1], big_n * fps[-1])
            return amp - big_n

        lo, hi = 0.5 * n0, 2.0 * n0
        glo, ghi = amp_gap(lo), amp_gap(hi)
        grow = 0
        while glo * ghi > 0 and grow < 8:
            lo *= 0.7
            hi *= 1.5
            glo, ghi = amp_gap(lo), amp_gap(hi)
            grow += 1
        if glo * ghi > 0:
            raise MarginLost("cap amplitude equation has no bracketed root")
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if amp_gap(mid) * glo <= 0:
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    lam_a = slope_target
    a = b = big_n = None
    for _ in range(10):
        lam_a = min(max(lam_a, p.lam + 1e-9), p.lam0 - 1e-9)
        core.extend_until_slope(lam_a, p.s_budget)
        a = core.find_slope(lam_a)
        b = a + blend_w
        core.extend(b + 4.0 * p.step)
        big_n = solve_big_n(a, b)
        fs, fps, _ = _integrate_blend(core, a, b, big_n)
        err = fps[-1] - slope_target
        if abs(err) < 1e-12:
            break
        lam_a -= err
    fs, fps, hstep = _integrate_blend(core, a, b, big_n)
    if fps[-1] <= lam:
        raise MarginLost("cap blend lost too much slope; shrink the width")
    theta_b = math.atan2(fs[-1] / big_n, fps[-1])
    s_prime = b - big_n * theta_b
    s_lam = s_prime + big_n * math.acos(lam)
    if s_lam < b:
        raise MarginLost("sine arc ends before the blend; shrink the width")
    core.extend(s_lam + 4.0 * p.step)

    width_b = b - a

    def blend_rhs(s, f):
        sig = smoothstep((np.asarray(s) - a) / width_b)
        return (1.0 - sig) * core.c2 * np.power(f, -core.alpha - 1.0) - sig * f / (
            big_n * big_n
        )

    fcurve = _DenseCurve(a, hstep, fs, fps)
    fpps = blend_rhs(a + hstep * np.arange(len(fs)), fs)
    fpcurve = _DenseCurve(a, hstep, fps, fpps)
    blend_f = _BlendCapF(fcurve, fpcurve, blend_rhs)
    sine_f = _SineF(big_n, s_prime)
    hmod = w.segments[0].hmod
    segments = (
        Segment("core", w.s_left, a, _CoreF(core), hmod),
        Segment("cap", a, b, blend_f, hmod),
        Segment("cap", b, s_lam, sine_f, hmod),
    )
    out = WarpProfile(
        params=p,
        core=core,
        segments=segments,
        s_left=w.s_left,
        s_lambda=s_lam,
        r=w.r,
        cap=CapInfo(big_n, s_prime, a, b),
        tail=None,
        origin=None,
    )
    _check_margins(out, a, s_lam, "cap_sine")
    return out


# ---------------------------------------------------------------------------
# Stage 3: h tail flattening
# ---------------------------------------------------------------------------

def flatten_h_tail(w: WarpProfile, width: float | None = None) -> WarpProfile:
    """Replace h' by psi * h' near the outer end so h flattens there.

    psi is the descending quintic smoothstep: psi and its first two
    derivatives vanish at s_lambda, so h', h'' (and the tracked third
    derivative) vanish at the boundary; h''<= psi h'' keeps inequality
    (3) intact.
    """
    p = w.params
    if w.cap is None:
        raise InputError("apply cap_sine before flattening the tail")
    if w.tail is not None:
        raise InputError("tail already applied")
    sine_zone = w.s_lambda - w.cap.blend_end
    if width is None:
        width = p.tail_width if p.tail_width is not None else 0.5 * sine_zone
    if width <= 0 or width >= w.s_lambda - w.cap.blend_start:
        raise InputError("tail width must sit inside the cap region")
    t0 = w.s_lambda - width
    base = None
    for seg in w.segments:
        if seg.s0 <= t0 < seg.s1:
            base = seg.hmod
    if base is None:
        raise InputError("tail start outside the profile")

    grid = np.linspace(t0, w.s_lambda, 4097)
    hstep = grid[1] - grid[0]
    h0, hp0, _ = base.eval(np.array([t0]))

    def unit(s):
        # snap the endpoints so the boundary conditions are exact zeros
        u = (np.asarray(s, dtype=float) - t0) / width
        u = np.where(u > 1.0 - 1e-13, 1.0, u)
        return np.where(np.abs(u) < 1e-13, 0.0, u)

    def psi(s):
        return 1.0 - smoothstep(unit(s))

    def psi_d(s):
        return -smoothstep_d(unit(s)) / width

    _, hp_nodes, hpp_nodes = base.eval(grid)
    tilde_hp = psi(grid) * hp_nodes
    tilde_h = h0[0] + _cumulative_trapezoid(tilde_hp, hstep)
    curve_h = _DenseCurve(t0, hstep, tilde_h, tilde_hp)

    def hpp_func(s):
        _, hp_s, hpp_s = base.eval(s)
        return psi(s) * hpp_s + psi_d(s) * hp_s

    tilde_hpp = hpp_func(grid)
    curve_hp = _DenseCurve(t0, hstep, tilde_hp, tilde_hpp)
    tail_h = _DenseH(curve_h, curve_hp, hpp_func)

    segments = []
    for seg in w.segments:
        if seg.s1 <= t0:
            segments.append(seg)
        elif seg.s0 >= t0:
            segments.append(Segment("tail", seg.s0, seg.s1, seg.fmod, tail_h))
        else:
            segments.append(Segment(seg.label, seg.s0, t0, seg.fmod, seg.hmod))
            segments.append(Segment("tail", t0, seg.s1, seg.fmod, tail_h))
    out = replace(w, segments=tuple(segments), tail=TailInfo(t0, width))
    _check_margins(out, t0, w.s_lambda, "flatten_h_tail")
    return out


# ---------------------------------------------------------------------------
# Stage 4: origin smoothing and rescale
# ---------------------------------------------------------------------------

def _solve_splice(h_val: float, hp_val: float, r: float):
    cosu = r * hp_val
    if cosu >= 1.0:
        raise NoSolution(
            f"splice matching needs r * h'(s0) < 1, got {cosu:.6f}"
        )
    u = math.acos(cosu)
    radius = r * h_val / math.sin(u)
    return radius, u


def _flatten_f(core, flat_end: float, rejoin: float, ramp: float):
    """Second-derivative profile omega * f'' with an exact core rejoin.

    omega rises from 0 at ``flat_end`` to a plateau P and descends to 1
    at ``rejoin``; P is solved linearly so the lost slope of the flat
    zone is recovered exactly, then f is rebuilt by integrating backward
    from the core values at ``rejoin``.
    """
    grid = np.linspace(flat_end, rejoin, 16385)
    hstep = grid[1] - grid[0]
    _, fp_nodes, fpp_nodes = core.eval(grid)
    up = smoothstep((grid - flat_end) / ramp)
    down = smoothstep((grid - (rejoin - ramp)) / ramp)
    base_i = _trapz(up * (1.0 - down) * fpp_nodes, hstep)
    rest_i = _trapz(up * down * fpp_nodes, hstep)
    target = float(fp_nodes[-1])
    plateau = (target - rest_i) / base_i

    def omega(s):
        s = np.asarray(s, dtype=float)
        u = smoothstep((s - flat_end) / ramp)
        d = smoothstep((s - (rejoin - ramp)) / ramp)
        return u * (plateau - (plateau - 1.0) * d)

    def fpp_func(s):
        return omega(s) * core.eval(s)[2]

    fpp_vals = omega(grid) * fpp_nodes
    # Backward cumulative integration anchored at the core values.
    fp_vals = target - (_cumulative_trapezoid(fpp_vals[::-1], hstep)[::-1])
    f_end = float(core.eval(np.array([rejoin]))[0][0])
    f_vals = f_end - (_cumulative_trapezoid(fp_vals[::-1], hstep)[::-1])
    fp_vals[0] = 0.0  # the residual here is quadrature roundoff
    curve_f = _DenseCurve(flat_end, hstep, f_vals, fp_vals)
    curve_fp = _DenseCurve(flat_end, hstep, fp_vals, fpp_vals)
    return _OriginBlendF(curve_f, curve_fp, fpp_func), float(f_vals[0]), plateau


def _smooth_kink(scaled_core, radius_hat, x0, x1):
    """Bridge from the splice sine into the rescaled core h on [x0, x1].

    The second derivative interpolates between sine-type curvature
    -h/radius_hat^2 and the rescaled core h''; both branches are
    negative, so the bridge never loses concavity.  Integrating backward
    from the core values at x1 closes the right seam exactly, and the
    exact sine through the resulting left endpoint data closes the left
    seam exactly (the sine parameters are re-solved there).

    Returns the dense bridge model plus (value, slope) at x0.
    """
    steps = 2048
    width = x1 - x0
    hstep = width / steps
    # Core-side curvature at nodes and half-steps for the RK4 sweep.
    fine = np.linspace(x0, x1, 2 * steps + 1)
    _, _, gr_fine = scaled_core.eval(fine)
    sig_fine = smoothstep((fine - x0) / width)
    inv_r2 = 1.0 / (radius_hat * radius_hat)

    def acc(idx, hval):
        # idx indexes the half-step grid
        return -(1.0 - sig_fine[idx]) * hval * inv_r2 + sig_fine[idx] * gr_fine[idx]

    h1, hp1, _ = scaled_core.eval(np.array([x1]))
    hv, hp = float(h1[0]), float(hp1[0])
    hs = [hv]
    hps = [hp]
    # integrate backward: step -hstep from x1 to x0
    for k in range(steps, 0, -1):
        i2, i1, i0 = 2 * k, 2 * k - 1, 2 * k - 2
        k1v, k1a = hp, acc(i2, hv)
        k2v, k2a = hp - 0.5 * hstep * k1a, acc(i1, hv - 0.5 * hstep * k1v)
        k3v, k3a = hp - 0.5 * hstep * k2a, acc(i1, hv - 0.5 * hstep * k2v)
        k4v, k4a = hp - hstep * k3a, acc(i0, hv - hstep * k3v)
        hv = hv - (hstep / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        hp = hp - (hstep / 6.0) * (k1a + 2 * k2a + 2 * k3a + k4a)
        hs.append(hv)
        hps.append(hp)
    h_vals = np.array(hs[::-1])
    hp_vals = np.array(hps[::-1])
    node_idx = np.arange(0, 2 * steps + 1, 2)
    hpp_vals = (
        -(1.0 - sig_fine[node_idx]) * h_vals * inv_r2
        + sig_fine[node_idx] * gr_fine[node_idx]
    )
    curve_h = _DenseCurve(x0, hstep, h_vals, hp_vals)
    curve_hp = _DenseCurve(x0, hstep, hp_vals, hpp_vals)
    hpp_curve = _DenseCurve(x0, hstep, hpp_vals, np.gradient(hpp_vals, hstep))
    model = _DenseH(curve_h, curve_hp, hpp_curve)
    return model, float(h_vals[0]), float(hp_vals[0])


def smooth_origin(w: WarpProfile, r: float, eps: float) -> WarpProfile:
    """Rescale h by r and rebuild the origin collar.

    After the rescale the spliced segment is an exact sine
    R sin((s - eps')/R) with unit slope at the new left endpoint eps',
    C^1-matched to r*h at the splice point and bridged through a small
    smoothing window; f is flattened to a constant over the splice and
    rejoined to the core solution exactly at ``eps``.
    """
    p = w.params
    if w.cap is None or w.tail is None:
        raise InputError("smooth_origin expects a capped, tail-flattened profile")
    if w.origin is not None:
        raise InputError("origin smoothing already applied")
    if not 0.0 < r <= 1.0:
        raise InputError("fibre scale r must lie in (0, 1]")
    if not 0.0 < eps < 0.8 * w.cap.blend_start:
        raise InputError("origin budget eps must leave a core zone intact")

    core = w.core
    delta = 0.001 * eps
    flat_end = 2.0 * delta
    ramp = 0.008 * eps
    splice_point = 1.2 * delta

    # Nominal sine through the unsmoothed r*h at the splice point; the
    # bridge below re-solves the exact parameters at the same point.
    h_sp, hp_sp, _ = _CoreH(core).eval(np.array([splice_point]))
    radius_hat, _ = _solve_splice(float(h_sp[0]), float(hp_sp[0]), r)
    w_k = min(0.2 * (flat_end - splice_point), 0.5 * radius_hat)
    x0, x1 = splice_point, splice_point + 2.0 * w_k

    blend_f, flat_value, plateau = _flatten_f(core, flat_end, eps, ramp)
    flat_f = _FlatF(flat_value)
    scaled_core_h = _CoreH(core, scale=r)
    kink_h, h_x0, hp_x0 = _smooth_kink(scaled_core_h, radius_hat, x0, x1)
    if not 0.0 < hp_x0 < 1.0 or h_x0 <= 0.0:
        raise NoSolution(
            f"bridge slope {hp_x0:.6f} at the splice point does not admit a sine"
        )
    radius = h_x0 / math.sqrt(1.0 - hp_x0 * hp_x0)
    u0 = math.atan2(h_x0 / radius, hp_x0)
    eps_prime = x0 - radius * u0

    segments = [
        Segment("splice", eps_prime, x0, flat_f, _SpliceH(radius, eps_prime)),
        Segment("flat", x0, x1, flat_f, kink_h),
        Segment("flat", x1, flat_end, flat_f, scaled_core_h),
        Segment("flat", flat_end, eps, blend_f, scaled_core_h),
    ]
    for seg in w.segments:
        if seg.s1 <= eps:
            continue
        s0 = max(seg.s0, eps)
        segments.append(Segment(seg.label, s0, seg.s1, seg.fmod, seg.hmod.rescaled(r)))

    out = replace(
        w,
        segments=tuple(segments),
        s_left=eps_prime,
        r=r,
        origin=OriginInfo(
            radius=radius,
            eps_prime=eps_prime,
            splice_point=splice_point,
            kink_halfwidth=w_k,
            flat_end=flat_end,
            rejoin=eps,
            flat_value=flat_value,
            plateau=plateau,
        ),
    )
    _check_margins(out, eps_prime, eps + 2 * p.step, "smooth_origin")
    return out


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

CSV_HEADER = "s,f,fp,fpp,h,hp,hpp,segment"


def export_profile(w: WarpProfile, destination) -> None:
    """Write the sampled profile as CSV (17 significant digits)."""

    def fmt(x):
        return format(float(x), ".17g")

    rows = []
    for seg, s, f, fp, fpp, h, hp, hpp in w.sample():
        for k in range(len(s)):
            rows.append(
                ",".join(
                    [fmt(s[k]), fmt(f[k]), fmt(fp[k]), fmt(fpp[k]),
                     fmt(h[k]), fmt(hp[k]), fmt(hpp[k]), seg.label]
                )
            )
    text = CSV_HEADER + "\n" + "\n".join(rows) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8") as fh:
            fh.write(text)
