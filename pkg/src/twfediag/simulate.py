"""Synthetic panel generation and a Monte Carlo harness.

Outcomes follow an additive model: group effect + period trend +
treatment times a planted cell effect + a cell-level shock. Common
trends therefore hold by construction, and the planted effects give
exact targets against which estimator bias can be measured.

Randomness is counter-based: the design (adoption dates, group effects,
trends, effect draws that are fixed across replications) uses the key
(seed, 0); replication r uses (seed, r + 1). Parallel and serial runs
of the harness therefore agree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from numpy.random import Generator, Philox

from .didm import did_m, did_m_placebo
from .errors import InvalidConfigError, PanelError
from .panel import CellTable, Observation
from .regression import beta_fd, beta_fe

ADOPTION_PATTERNS = ("staggered", "general", "more_early_adopters", "more_late_adopters")
EFFECT_KINDS = ("constant", "group_varying", "time_varying", "dynamic_buildup", "random")


@dataclass(frozen=True)
class EffectProfile:
    """Planted per-cell treatment effects.

    kind:
      constant         Delta = base everywhere
      group_varying    Delta = base + spread * z_g  (z_g drawn once per design)
      time_varying     Delta = base + spread * z_t
      dynamic_buildup  Delta = base + spread * (periods since the cell's
                       group last switched into treatment)
      random           Delta ~ Normal(base, sd), independently per cell
                       and per replication (effects independent of the
                       design, so the regressions are unbiased for the
                       treated-average effect)
    """

    kind: str = "constant"
    base: float = 1.0
    spread: float = 0.0
    sd: float = 0.0

    def __post_init__(self):
        if self.kind not in EFFECT_KINDS:
            raise InvalidConfigError(f"unknown effect kind {self.kind!r}")


@dataclass(frozen=True)
class DgpConfig:
    n_groups: int
    n_periods: int
    adoption: str = "staggered"
    effect: EffectProfile = field(default_factory=EffectProfile)
    noise_sd: float = 1.0
    units_per_cell: object = 1  # int, or (G, T) array of cell counts
    serial_rho: float = 0.0  # within-group AR(1) correlation of cell shocks
    group_effect_sd: float = 1.0
    time_trend_sd: float = 1.0
    group_effects: Optional[tuple] = None  # explicit gamma_g, overrides drawing
    time_trends: Optional[tuple] = None  # explicit lambda_t
    adoption_dates: Optional[tuple] = None  # per-group first treated period, 0 = never
    group_sizes: Optional[tuple] = None  # per-group unit counts, constant over time
    seed: int = 0

    def __post_init__(self):
        if self.n_groups < 2 or self.n_periods < 2:
            raise InvalidConfigError("need at least 2 groups and 2 periods")
        if self.adoption not in ADOPTION_PATTERNS:
            raise InvalidConfigError(f"unknown adoption pattern {self.adoption!r}")
        counts = np.asarray(self.units_per_cell)
        if counts.ndim == 0:
            if int(counts) < 1:
                raise InvalidConfigError("units_per_cell must be >= 1")
        elif counts.shape != (self.n_groups, self.n_periods) or (counts < 1).any():
            raise InvalidConfigError(
                "per-cell units_per_cell must be a (groups, periods) array of "
                "positive integers"
            )
        if self.noise_sd < 0:
            raise InvalidConfigError("noise_sd must be >= 0")
        if not -0.999 <= self.serial_rho <= 0.999:
            raise InvalidConfigError("serial_rho must lie in (-1, 1)")
        if self.group_effects is not None and len(self.group_effects) != self.n_groups:
            raise InvalidConfigError("group_effects length must equal n_groups")
        if self.time_trends is not None and len(self.time_trends) != self.n_periods:
            raise InvalidConfigError("time_trends length must equal n_periods")
        if self.adoption_dates is not None:
            if len(self.adoption_dates) != self.n_groups:
                raise InvalidConfigError("adoption_dates length must equal n_groups")
            for d in self.adoption_dates:
                if not (d == 0 or 1 <= d <= self.n_periods):
                    raise InvalidConfigError(
                        f"adoption date {d} outside 0 (never) .. {self.n_periods}"
                    )
        if self.group_sizes is not None:
            if len(self.group_sizes) != self.n_groups:
                raise InvalidConfigError("group_sizes length must equal n_groups")
            if any(int(s) < 1 for s in self.group_sizes):
                raise InvalidConfigError("group sizes must be >= 1")


@dataclass(frozen=True)
class PanelDesign:
    """A realized design: treatment paths, counts, trends, fixed effects."""

    config: DgpConfig
    treat: np.ndarray  # (G, T)
    counts: np.ndarray  # (G, T) ints
    gamma: np.ndarray  # (G,)
    lam: np.ndarray  # (T,)
    delta: Optional[np.ndarray]  # (G, T); None when effects are redrawn per rep

    def expected_effects(self) -> np.ndarray:
        """E[Delta_{g,t}] cell by cell."""
        if self.delta is not None:
            return self.delta
        return np.full(self.treat.shape, self.config.effect.base)


def _design_rng(seed: int) -> Generator:
    return Generator(Philox(key=np.array([seed, 0], dtype=np.uint64)))


def _rep_rng(seed: int, rep: int) -> Generator:
    return Generator(Philox(key=np.array([seed, rep + 1], dtype=np.uint64)))


def _draw_adoption(config: DgpConfig, rng: Generator) -> np.ndarray:
    """Treatment matrix from the adoption pattern. Never-treated stays 0."""
    G, T = config.n_groups, config.n_periods
    D = np.zeros((G, T))
    if config.adoption_dates is not None:
        for g, d0 in enumerate(config.adoption_dates):
            if d0 >= 1:
                D[g, int(d0) - 1 :] = 1.0
        return D
    if config.adoption == "general":
        D[:] = (rng.random((G, T)) < 0.5).astype(float)
        return D
    never = T + 1
    if config.adoption == "staggered":
        dates = np.arange(2, T + 2)  # adoption at 2..T or never
        probs = np.ones(T)
    elif config.adoption == "more_early_adopters":
        dates = np.append(np.arange(1, T + 1), never)
        probs = np.append(np.arange(T, 0, -1.0), 1.0)
    else:  # more_late_adopters
        dates = np.append(np.arange(1, T + 1), never)
        probs = np.append(np.arange(1.0, T + 1), 1.0)
    probs = probs / probs.sum()
    drawn = rng.choice(dates, size=G, p=probs)
    for g, d0 in enumerate(drawn):
        if d0 <= T:
            D[g, int(d0) - 1 :] = 1.0
    return D


def _buildup_age(D: np.ndarray) -> np.ndarray:
    """Consecutive treated periods ending at each cell, minus one; 0 if untreated."""
    G, T = D.shape
    age = np.zeros((G, T))
    for t in range(T):
        if t == 0:
            age[:, t] = 0.0
        else:
            age[:, t] = np.where(D[:, t - 1] == 1.0, age[:, t - 1] + 1.0, 0.0)
    return age * D


def realize_design(config: DgpConfig) -> PanelDesign:
    """Draw the design-level randomness once (fixed across replications)."""
    rng = _design_rng(config.seed)
    G, T = config.n_groups, config.n_periods
    D = _draw_adoption(config, rng)
    if config.group_sizes is not None:
        counts = np.repeat(
            np.asarray(config.group_sizes, dtype=np.int64)[:, None], T, axis=1
        )
    elif np.ndim(config.units_per_cell) == 0:
        counts = np.full((G, T), int(config.units_per_cell), dtype=np.int64)
    else:
        counts = np.array(config.units_per_cell, dtype=np.int64)
    gamma = (
        np.asarray(config.group_effects, dtype=float)
        if config.group_effects is not None
        else config.group_effect_sd * rng.standard_normal(G)
    )
    lam = (
        np.asarray(config.time_trends, dtype=float)
        if config.time_trends is not None
        else config.time_trend_sd * rng.standard_normal(T)
    )
    eff = config.effect
    if eff.kind == "constant":
        delta = np.full((G, T), eff.base)
    elif eff.kind == "group_varying":
        delta = eff.base + eff.spread * rng.standard_normal(G)[:, None] * np.ones((1, T))
    elif eff.kind == "time_varying":
        delta = eff.base + eff.spread * np.ones((G, 1)) * rng.standard_normal(T)[None, :]
    elif eff.kind == "dynamic_buildup":
        delta = eff.base + eff.spread * _buildup_age(D)
    else:  # random: redrawn every replication
        delta = None
    return PanelDesign(config=config, treat=D, counts=counts, gamma=gamma, lam=lam, delta=delta)


def draw_cells(design: PanelDesign, rep: int = 0) -> CellTable:
    """One replication's cell table from a realized design."""
    cfg = design.config
    rng = _rep_rng(cfg.seed, rep)
    G, T = cfg.n_groups, cfg.n_periods
    delta = design.delta
    if delta is None:
        delta = cfg.effect.base + cfg.effect.sd * rng.standard_normal((G, T))
    shock = rng.standard_normal((G, T))
    if cfg.serial_rho != 0.0:
        rho = cfg.serial_rho
        for t in range(1, T):
            shock[:, t] = rho * shock[:, t - 1] + np.sqrt(1.0 - rho**2) * shock[:, t]
    outcomes = (
        design.gamma[:, None]
        + design.lam[None, :]
        + design.treat * delta
        + cfg.noise_sd * shock
    )
    return CellTable(
        groups=range(G),
        periods=range(1, T + 1),
        counts=design.counts,
        outcomes=outcomes,
        treatments=design.treat,
    )


def generate_panel(config: DgpConfig, rep: int = 0) -> list[Observation]:
    """Unit-level observations for one replication.

    Units within a cell share the cell-level shock, so aggregating the
    returned observations reproduces :func:`draw_cells` exactly. Unit id
    (g, i) persists across periods, as in a panel.
    """
    design = realize_design(config)
    cells = draw_cells(design, rep)
    obs = []
    for gi, g in enumerate(cells.groups):
        for ti, t in enumerate(cells.periods):
            for u in range(int(cells.counts[gi, ti])):
                obs.append(
                    Observation(
                        unit=(g, u),
                        group=g,
                        time=t,
                        outcome=float(cells.outcomes[gi, ti]),
                        treatment=float(cells.treat[gi, ti]),
                    )
                )
    return obs


# -- targets ---------------------------------------------------------------


def planted_att(design: PanelDesign) -> float:
    """Share-weighted expected effect across treated cells."""
    mask = design.treat == 1.0
    n1 = design.counts[mask].sum()
    if n1 == 0:
        raise InvalidConfigError("design has no treated cells")
    eff = design.expected_effects()
    return float((design.counts[mask] * eff[mask]).sum() / n1)


def planted_switcher_effect(design: PanelDesign) -> float:
    """Count-weighted expected effect across switching cells."""
    D = design.treat
    switch = np.zeros_like(D, dtype=bool)
    switch[:, 1:] = D[:, 1:] != D[:, :-1]
    ns = design.counts[switch].sum()
    if ns == 0:
        raise InvalidConfigError("design has no switching cells")
    eff = design.expected_effects()
    return float((design.counts[switch] * eff[switch]).sum() / ns)


def planted_target(design: PanelDesign, estimator_id: str) -> float:
    if estimator_id in ("fe", "fd"):
        return planted_att(design)
    if estimator_id == "didm":
        return planted_switcher_effect(design)
    if estimator_id.startswith("placebo_"):
        return 0.0
    raise InvalidConfigError(f"unknown estimator id {estimator_id!r}")


# -- harness ----------------------------------------------------------------


def _estimator_fn(estimator_id: str):
    if estimator_id == "fe":
        return lambda cells: beta_fe(cells).beta
    if estimator_id == "fd":
        return lambda cells: beta_fd(cells).beta
    if estimator_id == "didm":
        return lambda cells: did_m(cells).estimate
    if estimator_id.startswith("placebo_"):
        horizon = int(estimator_id.split("_", 1)[1])
        return lambda cells: did_m_placebo(cells, horizon).estimate
    raise InvalidConfigError(f"unknown estimator id {estimator_id!r}")


@dataclass(frozen=True)
class EstimatorMc:
    estimator: str
    replications_ok: int
    replications_failed: int
    mean: float
    target: float
    bias: float
    mc_se: float
    variance: float

    def to_dict(self):
        return {
            "estimator": self.estimator,
            "replications_ok": self.replications_ok,
            "replications_failed": self.replications_failed,
            "mean": self.mean,
            "target": self.target,
            "bias": self.bias,
            "mc_se": self.mc_se,
            "variance": self.variance,
        }


@dataclass(frozen=True)
class MonteCarloSummary:
    replications: int
    seed: int
    rows: tuple  # one EstimatorMc per estimator

    def row(self, estimator_id: str) -> EstimatorMc:
        for r in self.rows:
            if r.estimator == estimator_id:
                return r
        raise KeyError(estimator_id)

    def to_dict(self):
        return {
            "replications": self.replications,
            "seed": self.seed,
            "estimators": [r.to_dict() for r in self.rows],
        }


def monte_carlo(
    config: DgpConfig,
    estimators: Iterable[str] = ("fe", "fd", "didm"),
    R: int = 2000,
) -> MonteCarloSummary:
    """Bias and dispersion of each estimator over R replications.

    The design is realized once; replications redraw only the shocks (and
    the effects, for the "random" profile). Each estimator's bias is
    measured against its own planted target: the treated-average effect
    for the regressions, the switching-cell average for the switcher
    estimator, zero for placebos. Per-replication estimator failures are
    counted and excluded, not fatal.
    """
    if R < 100:
        raise InvalidConfigError("Monte Carlo needs at least 100 replications")
    ids = list(dict.fromkeys(estimators))
    if not ids:
        raise InvalidConfigError("no estimators requested")
    fns = {i: _estimator_fn(i) for i in ids}
    design = realize_design(config)
    targets = {i: planted_target(design, i) for i in ids}

    draws = {i: [] for i in ids}
    failures = {i: 0 for i in ids}
    for rep in range(R):
        cells = draw_cells(design, rep)
        for i in ids:
            try:
                draws[i].append(fns[i](cells))
            except PanelError:
                failures[i] += 1

    rows = []
    for i in ids:
        vals = np.asarray(draws[i])
        if len(vals) == 0:
            raise InvalidConfigError(f"estimator {i!r} failed on every replication")
        mean = float(vals.mean())
        sd = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        rows.append(
            EstimatorMc(
                estimator=i,
                replications_ok=len(vals),
                replications_failed=failures[i],
                mean=mean,
                target=targets[i],
                bias=mean - targets[i],
                mc_se=float(sd / np.sqrt(len(vals))),
                variance=float(sd**2),
            )
        )
    return MonteCarloSummary(replications=R, seed=config.seed, rows=tuple(rows))


# -- config files ------------------------------------------------------------

_CONFIG_KEYS = {
    "groups": int,
    "periods": int,
    "adoption": str,
    "effect": str,
    "effect_base": float,
    "effect_spread": float,
    "effect_sd": float,
    "noise_sd": float,
    "units_per_cell": int,
    "serial_rho": float,
    "group_effect_sd": float,
    "time_trend_sd": float,
    "group_effects": str,
    "time_trends": str,
    "adoption_dates": str,
    "group_sizes": str,
    "seed": int,
    "estimators": str,
    "replications": int,
}


def parse_config_file(path) -> tuple[DgpConfig, list[str], int]:
    """Read a key = value simulation config.

    Returns (config, estimator ids, replications). Lines starting with
    '#' and blank lines are ignored; list values are comma-separated.
    """
    raw = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InvalidConfigError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in _CONFIG_KEYS:
                raise InvalidConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                raw[key] = _CONFIG_KEYS[key](value)
            except ValueError as exc:
                raise InvalidConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc

    for required in ("groups", "periods"):
        if required not in raw:
            raise InvalidConfigError(f"config is missing the {required!r} key")

    def float_list(key):
        if key not in raw:
            return None
        return tuple(float(x) for x in raw[key].split(","))

    def int_list(key):
        if key not in raw:
            return None
        return tuple(int(x) for x in raw[key].split(","))

    effect = EffectProfile(
        kind=raw.get("effect", "constant"),
        base=raw.get("effect_base", 1.0),
        spread=raw.get("effect_spread", 0.0),
        sd=raw.get("effect_sd", 0.0),
    )
    config = DgpConfig(
        n_groups=raw["groups"],
        n_periods=raw["periods"],
        adoption=raw.get("adoption", "staggered"),
        effect=effect,
        noise_sd=raw.get("noise_sd", 1.0),
        units_per_cell=raw.get("units_per_cell", 1),
        serial_rho=raw.get("serial_rho", 0.0),
        group_effect_sd=raw.get("group_effect_sd", 1.0),
        time_trend_sd=raw.get("time_trend_sd", 1.0),
        group_effects=float_list("group_effects"),
        time_trends=float_list("time_trends"),
        adoption_dates=int_list("adoption_dates"),
        group_sizes=int_list("group_sizes"),
        seed=raw.get("seed", 0),
    )
    estimators = [e.strip() for e in raw.get("estimators", "fe,fd,didm").split(",") if e.strip()]
    replications = raw.get("replications", 2000)
    if replications < 100:
        raise InvalidConfigError("replications must be >= 100")
    return config, estimators, replications
