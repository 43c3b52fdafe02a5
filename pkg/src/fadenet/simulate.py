"""Monte Carlo estimation of the layered scheme's per-level rates.

The estimator is a nested plug-in: outer samples come from the true channel,
and both the conditional and the marginal output densities are approximated
by Gaussian-mixture averages over fresh inner draws of whatever the density
does not condition on.  Conditioned on the interfering fading entries and
inputs, the output is exactly complex Gaussian, so every mixture component
is closed form and the only approximation error is Monte Carlo.

Determinism contract: every public operation takes a seed, and a sweep
expands its root seed into one independent stream per (grid point, level),
so the worker count never changes the output bytes.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.special import logsumexp

from .bounds import (
    AllocationInfeasibleError,
    PowerAllocation,
    allocation,
    converse_envelope,
    scheme_rate_lower_bound,
)
from .fading import FadingModel, _as_generator, _standard_complex, sample_matrix
from .powerchain import PowerChain, longest_chain, validate_chain
from .topology import Topology

__all__ = [
    "InputLaw",
    "MiEstimate",
    "SweepRecord",
    "sample_input",
    "sample_output",
    "estimate_pair_mi",
    "snr_sweep",
    "records_to_csv",
    "records_to_json",
    "fit_loglog_slope",
]

_MIN_SAMPLES = 100


@dataclass(frozen=True)
class InputLaw:
    """Input distribution of the layered scheme.

    Chain member nu transmits with log-uniform squared magnitude on level
    nu's window and uniform phase; every other transmitter is exactly zero.
    """

    n_t: int
    chain: PowerChain
    alloc: PowerAllocation

    def __post_init__(self) -> None:
        if len(self.chain) != self.alloc.kappa:
            raise ValueError("chain length and allocation level count differ")
        seen = set(self.chain.transmitters)
        if len(seen) != len(self.chain):
            raise ValueError("chain transmitters must be distinct")
        if not seen <= set(range(1, self.n_t + 1)):
            raise ValueError("chain transmitter out of range")


def _level_magnitudes(
    rng: np.random.Generator, x_min: float, x_max: float, shape
) -> np.ndarray:
    # log|X|^2 uniform on [log x_min^2, log x_max^2] <=> log|X| uniform
    return np.exp(rng.uniform(math.log(x_min), math.log(x_max), size=shape))


def _level_inputs(
    rng: np.random.Generator, x_min: float, x_max: float, shape
) -> np.ndarray:
    mags = _level_magnitudes(rng, x_min, x_max, shape)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=shape)
    return mags * np.exp(1j * phases)


def sample_input(law: InputLaw, seed, size: int | None = None) -> np.ndarray:
    """One input vector (or ``size`` stacked rows) drawn from the law.

    Off-chain components are exactly zero, not merely small.
    """
    rng = _as_generator(seed)
    n = 1 if size is None else int(size)
    if n < 1:
        raise ValueError("size must be positive")
    x = np.zeros((n, law.n_t), dtype=complex)
    for level, t in enumerate(law.chain.transmitters, start=1):
        x_min, x_max = law.alloc.levels[level - 1]
        x[:, t - 1] = _level_inputs(rng, x_min, x_max, n)
    return x[0] if size is None else x


def sample_output(model: FadingModel, x: np.ndarray, seed) -> np.ndarray:
    """One channel use: y = Hx + z with a fresh fading draw and CN(0,1) noise."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (model.topo.n_t,):
        raise ValueError(f"input must have shape ({model.topo.n_t},), got {x.shape}")
    rng = _as_generator(seed)
    h = sample_matrix(model, rng)
    z = _standard_complex(rng, (model.topo.n_r,))
    return h @ x + z


class MiEstimate(NamedTuple):
    value: float
    stderr: float


def estimate_pair_mi(
    model: FadingModel,
    chain: PowerChain,
    alloc: PowerAllocation,
    nu: int,
    n_outer: int = 20000,
    m_inner: int = 2000,
    *,
    seed,
    magnitude_sampler: Callable[[np.random.Generator, tuple], np.ndarray] | None = None,
) -> MiEstimate:
    """Nested Monte Carlo estimate of I(X(t_nu); Y(r_nu)) in nats.

    The witness receiver sees the level-nu transmitter plus whichever weaker
    chain members it can hear; stronger members are structurally silent at it
    (checked, not assumed).  Outer samples (x_i, y_i) come from the true
    channel.  log f(y|x) averages, over ``m_inner`` fresh draws of the
    hearable interferers' fading and inputs, the exact conditional Gaussian
    density whose mean interpolates the witness entry from the drawn
    interferer entries and whose variance is the Schur-complement residual.
    log f(y) repeats this with fresh input draws included.  The standard
    error comes from the outer-sample variance alone.

    ``magnitude_sampler(rng, shape)``, when given, replaces the level-nu
    magnitude law in both the channel input and the marginal's fresh draws;
    phases stay uniform.  Meant for diagnostics (constant or two-point
    magnitudes) where the estimate has a closed-form or zero target.
    """
    topo = model.topo
    validate_chain(topo, chain)
    kappa = len(chain)
    if len(alloc.levels) != kappa:
        raise ValueError("allocation level count and chain length differ")
    if not 1 <= nu <= kappa:
        raise ValueError(f"level {nu} out of range 1..{kappa}")
    if n_outer < _MIN_SAMPLES or m_inner < _MIN_SAMPLES:
        raise ValueError(f"need at least {_MIN_SAMPLES} outer and inner samples")

    r = chain.witnesses[nu - 1]
    t = chain.transmitters[nu - 1]
    for eta in range(1, nu):
        if (r, chain.transmitters[eta - 1]) not in topo.zeros:
            raise ValueError(
                f"stronger chain member {chain.transmitters[eta - 1]} reaches witness {r}"
            )

    interferers = [
        eta
        for eta in range(nu + 1, kappa + 1)
        if (r, chain.transmitters[eta - 1]) not in topo.zeros
    ]
    d = len(interferers)
    mu_t = model.entry_mean(r, t)
    if d:
        g_entries = [(r, chain.transmitters[eta - 1]) for eta in interferers]
        joint = model.submatrix([(r, t)] + g_entries)
        chol_joint = np.linalg.cholesky(joint)
        mu_g = np.array([model.entry_mean(*e) for e in g_entries])
        mu_joint = np.concatenate(([mu_t], mu_g))
        chol_g = np.linalg.cholesky(joint[1:, 1:])
        # conditional mean of the witness entry: mu_t + (g - mu_g) @ coef
        coef = np.linalg.solve(joint[1:, 1:].conj(), joint[0, 1:])
        eps2 = model.conditional_variance((r, t), g_entries)
        windows = [alloc.levels[eta - 1] for eta in interferers]
    else:
        eps2 = model.entry_variance(r, t)

    x_lo, x_hi = alloc.levels[nu - 1]
    rng = _as_generator(seed)
    log_m = math.log(m_inner)

    def draw_target(shape) -> np.ndarray:
        if magnitude_sampler is None:
            mags = _level_magnitudes(rng, x_lo, x_hi, shape)
        else:
            mags = np.asarray(magnitude_sampler(rng, shape), dtype=float)
            if mags.shape != (shape if isinstance(shape, tuple) else (shape,)):
                raise ValueError("magnitude_sampler returned wrong shape")
        return mags * np.exp(1j * rng.uniform(0.0, 2.0 * math.pi, size=shape))

    def draw_interferer_inputs(shape) -> np.ndarray:
        xi = np.empty(shape + (d,), dtype=complex)
        for j, (lo, hi) in enumerate(windows):
            xi[..., j] = _level_inputs(rng, lo, hi, shape)
        return xi

    def mixture_logpdf(y: np.ndarray, x: np.ndarray) -> np.ndarray:
        # log of the m-component mixture density at y, components indexed by
        # the trailing axis of x (and the fresh interference draws)
        if d:
            g = mu_g + _standard_complex(rng, x.shape + (d,)) @ chol_g.T
            xi = draw_interferer_inputs(x.shape)
            mean = (mu_t + (g - mu_g) @ coef) * x + np.sum(g * xi, axis=-1)
        else:
            mean = mu_t * x
        var = 1.0 + eps2 * np.abs(x) ** 2
        comp = -np.log(math.pi * var) - np.abs(y[:, None] - mean) ** 2 / var
        return logsumexp(comp, axis=-1) - log_m

    chunk = 256 if d == 0 else 64
    vals = np.empty(n_outer)
    done = 0
    while done < n_outer:
        n = min(chunk, n_outer - done)
        x = draw_target((n,))
        if d:
            # true draw: witness and interferer entries jointly, then inputs
            hv = mu_joint + _standard_complex(rng, (n, d + 1)) @ chol_joint.T
            xi_true = draw_interferer_inputs((n,))
            signal = hv[:, 0] * x + np.sum(hv[:, 1:] * xi_true, axis=-1)
        else:
            h_t = mu_t + math.sqrt(eps2) * _standard_complex(rng, (n,))
            signal = h_t * x
        y = signal + _standard_complex(rng, (n,))

        if d:
            log_cond = mixture_logpdf(y, np.broadcast_to(x[:, None], (n, m_inner)))
        else:
            var = 1.0 + eps2 * np.abs(x) ** 2
            log_cond = -np.log(math.pi * var) - np.abs(y - mu_t * x) ** 2 / var
        log_marg = mixture_logpdf(y, draw_target((n, m_inner)))
        vals[done : done + n] = log_cond - log_marg
        done += n

    stderr = float(np.std(vals, ddof=1) / math.sqrt(n_outer)) if n_outer > 1 else 0.0
    return MiEstimate(value=float(np.mean(vals)), stderr=stderr)


@dataclass(frozen=True)
class SweepRecord:
    """Everything computed at one grid point of an SNR sweep.

    Infeasible points (budget below the allocation threshold) carry None in
    the estimate and bound fields, a False flag, and the reason in ``note``.
    """

    snr: float
    kappa_star: int
    loglog_term: float | None
    analytic_lower: float | None
    mc_estimate: float | None
    mc_stderr: float | None
    analytic_upper: float | None
    n_outer: int
    m_inner: int
    seed: int
    feasible: bool
    note: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "snr": self.snr,
            "kappa_star": self.kappa_star,
            "loglog_term": self.loglog_term,
            "analytic_lower": self.analytic_lower,
            "mc_estimate": self.mc_estimate,
            "mc_stderr": self.mc_stderr,
            "analytic_upper": self.analytic_upper,
            "n_outer": self.n_outer,
            "m_inner": self.m_inner,
            "seed": self.seed,
            "feasible": self.feasible,
            "note": self.note,
        }


def _sweep_point(
    topo: Topology,
    model: FadingModel,
    chain: PowerChain,
    kappa_star: int,
    index: int,
    snr: float,
    n_outer: int,
    m_inner: int,
    root_seed: int,
) -> SweepRecord:
    loglog = kappa_star * math.log(math.log(snr)) if snr > math.e else None
    base = {
        "snr": snr,
        "kappa_star": kappa_star,
        "n_outer": n_outer,
        "m_inner": m_inner,
        "seed": root_seed,
    }
    try:
        alloc = allocation(snr, kappa_star)
    except AllocationInfeasibleError as exc:
        return SweepRecord(
            loglog_term=loglog,
            analytic_lower=None,
            mc_estimate=None,
            mc_stderr=None,
            analytic_upper=None,
            feasible=False,
            note=f"below feasibility threshold {exc.threshold:.6g}",
            **base,
        )
    lower = scheme_rate_lower_bound(topo, chain, model, snr).lower_bound
    upper = converse_envelope(topo, model, snr)
    total = 0.0
    var = 0.0
    for nu in range(1, kappa_star + 1):
        est = estimate_pair_mi(
            model,
            chain,
            alloc,
            nu,
            n_outer,
            m_inner,
            seed=np.random.SeedSequence([root_seed, index, nu]),
        )
        total += est.value
        var += est.stderr**2
    return SweepRecord(
        loglog_term=loglog,
        analytic_lower=lower,
        mc_estimate=total,
        mc_stderr=math.sqrt(var),
        analytic_upper=upper,
        feasible=True,
        **base,
    )


def snr_sweep(
    topo: Topology,
    model: FadingModel,
    e_grid: Sequence[float],
    n_outer: int = 20000,
    m_inner: int = 2000,
    *,
    seed: int,
    workers: int = 1,
) -> list[SweepRecord]:
    """Evaluate bounds and the summed per-level MC estimate over an SNR grid.

    Each grid point and chain level gets its own child seed derived from the
    root by position, and records are assembled in grid order, so the result
    is byte-identical for any ``workers`` count.  Points below the allocation
    threshold come back flagged infeasible instead of failing the sweep.
    """
    if model.topo != topo:
        raise ValueError("model was built for a different topology")
    if not topo.is_pruned:
        raise ValueError("sweep requires a pruned topology")
    grid = [float(v) for v in e_grid]
    if not grid:
        raise ValueError("grid is empty")
    if any(v <= 0 for v in grid):
        raise ValueError("grid values must be positive")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    root_seed = int(seed)
    if root_seed < 0:
        raise ValueError("seed must be non-negative")
    if workers < 1:
        raise ValueError("workers must be at least 1")

    kappa_star, chain = longest_chain(topo)

    def point(i: int) -> SweepRecord:
        return _sweep_point(
            topo, model, chain, kappa_star, i, grid[i], n_outer, m_inner, root_seed
        )

    if workers == 1:
        return [point(i) for i in range(len(grid))]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(point, range(len(grid))))


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def records_to_csv(records: Sequence[SweepRecord]) -> str:
    """Render sweep records as CSV with a fixed schema.

    Floats are written with repr, the shortest round-trip form, so equal
    records always produce equal bytes.
    """
    lines = ["E,kappa_star,loglog,lower,mc,mc_stderr,upper,feasible"]
    for rec in records:
        lines.append(
            ",".join(
                _csv_cell(v)
                for v in (
                    rec.snr,
                    rec.kappa_star,
                    rec.loglog_term,
                    rec.analytic_lower,
                    rec.mc_estimate,
                    rec.mc_stderr,
                    rec.analytic_upper,
                    rec.feasible,
                )
            )
        )
    return "\n".join(lines) + "\n"


def records_to_json(records: Sequence[SweepRecord]) -> str:
    return json.dumps([rec.to_json_dict() for rec in records], indent=2) + "\n"


def fit_loglog_slope(
    records: Sequence[SweepRecord], field: str = "mc_estimate"
) -> tuple[float, float, float]:
    """Least-squares fit of ``field`` against log log E over feasible records.

    Returns (slope, intercept, rms_residual); the slope is the empirical
    estimate of the chain-length pre-factor.  ``field`` may also name one of
    the analytic bounds to fit the same line through them.
    """
    if field not in ("mc_estimate", "analytic_lower", "analytic_upper"):
        raise ValueError(f"cannot fit field {field!r}")
    pts = [
        (math.log(math.log(rec.snr)), getattr(rec, field))
        for rec in records
        if rec.feasible and getattr(rec, field) is not None
    ]
    if len(pts) < 3:
        raise ValueError("need at least 3 feasible records to fit")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if np.ptp(x) == 0:
        raise ValueError("all grid points equal; slope undefined")
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), float(intercept), resid

