"""Rotosensor — recherche des états optimaux et des angles critiques.

== Recherche ==
Pour η fixé, on minimise (ou maximise) F(η) = φ_0 + Σ_t φ_t A_t sur les
2(N+1) paramètres réels (Re c_m, Im c_m). Chaque proposition est projetée sur
la sphère unité avant évaluation. Multi-départ Nelder-Mead depuis des états
de Haar, graines dérivées de (seed, indice de η, indice de départ) : le
résultat est déterministe quel que soit le nombre de threads.
Le pool de threads ne fait que plafonner le parallélisme : les petits calculs
numpy de l'objectif gardent le GIL. L'objectif évalue tous les A_t en une
passe (MeasureKernel) sans construire de SpinState.

Les optima sont comparés par profil A_t, jamais par amplitudes : l'optimum est
une variété (rotations, phase globale).

== Balayage ==
Un lot froid de départs à chaque η, plus un départ chaud depuis l'optimum
précédent. Une transition est signalée entre deux points dont les profils
diffèrent de plus de 1e-3 ; l'angle critique est ensuite résolu sur
Σ_t φ_t(η) (A_t¹ − A_t²) = 0.
"""

import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from roto_fidelity import (
    AngularTable, angular_table, average_fidelity, critical_function, phi, phi_values,
)
from roto_specfun import SpinQuantum
from roto_state import (
    NORM_FLOOR, AnticoherenceProfile, MeasureKernel, SpinState, measure_kernel, profile, random_state,
)

HIT_TOLERANCE = 1e-7
TRANSITION_THRESHOLD = 1e-3
RESIDUAL_LIMIT = 1e-9
ROOT_XTOL = 1e-12
NEGATIVITY_SLACK = 1e-12


class BracketError(ValueError):
    """Pas de changement de signe (ou résidu trop grand) sur l'intervalle."""


# ── Types ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 64
    max_iter: int = 2000
    tolerance: float = 1e-12
    simplex_scale: float = 0.3
    seed: int = 0
    threads: int = 1
    polish_rounds: int = 5
    warm_start: bool = True

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError(f"restarts doit être ≥ 1 : {self.restarts}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter doit être ≥ 1 : {self.max_iter}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance doit être > 0 : {self.tolerance}")
        if not self.simplex_scale > 0:
            raise ValueError(f"simplex_scale doit être > 0 : {self.simplex_scale}")
        if self.seed < 0:
            raise ValueError(f"seed doit être ≥ 0 : {self.seed}")
        if self.threads < 1:
            raise ValueError(f"threads doit être ≥ 1 : {self.threads}")


@dataclass(frozen=True, eq=False)
class SweepRecord:
    eta: float
    best_value: float
    best_state: SpinState
    profile: AnticoherenceProfile
    restarts_hitting_best: int
    converged: bool = True
    n_evaluations: int = 0
    mode: str = "min"


@dataclass(frozen=True)
class CriticalAngle:
    eta_star: float
    left_profile: AnticoherenceProfile
    right_profile: AnticoherenceProfile
    bracket: tuple[float, float]
    residual: float = 0.0


@dataclass(frozen=True)
class Eta0Scaling:
    j: SpinQuantum
    eta0: float
    ratio: float            # η₀ · 4j / (3π)
    alt_estimate: float     # 9 / (4j)


@dataclass
class _Objective:
    spin: SpinQuantum
    phis: np.ndarray
    sign: float
    calls: int = field(default=0)
    kernel: MeasureKernel = field(init=False)

    def __post_init__(self):
        self.kernel = measure_kernel(self.spin.two_j)

    def __call__(self, x: np.ndarray) -> float:
        self.calls += 1
        dim = self.spin.dim
        norm = np.linalg.norm(x)
        if norm < NORM_FLOOR:
            return 1e3
        amps = (x[:dim] + 1j * x[dim:]) / norm
        value = self.phis[0] + float(np.dot(self.phis[1:], self.kernel.measures(amps)))
        return self.sign * value


# ── Recherche locale ────────────────────────────────────────────────────────

def _as_params(state: SpinState) -> np.ndarray:
    return np.concatenate([state.amps.real, state.amps.imag])


def _local_search(objective: _Objective, x0: np.ndarray, cfg: SearchConfig):
    """Nelder-Mead puis relances à pas réduit tant que le gain dépasse la tolérance."""
    x = x0 / np.linalg.norm(x0)
    value = objective(x)
    scale = cfg.simplex_scale
    converged = False
    for round_index in range(cfg.polish_rounds + 1):
        simplex = x + scale * np.vstack([np.zeros(len(x)), np.eye(len(x))])
        res = minimize(
            objective, x, method="Nelder-Mead",
            options={
                "maxiter": cfg.max_iter,
                "xatol": 1e-10,
                "fatol": cfg.tolerance,
                "adaptive": True,
                "initial_simplex": simplex,
            },
        )
        gain = value - res.fun
        if res.fun <= value:
            x = res.x / np.linalg.norm(res.x)
            value = objective(x)
        converged = bool(res.success)
        if round_index > 0 and gain < cfg.tolerance:
            break
        scale *= 0.1
    return x, value, converged


def _restart_seed(cfg: SearchConfig, eta_index: int, restart: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([cfg.seed, eta_index, restart])


def _optimize(
    j,
    eta: float,
    cfg: SearchConfig,
    sign: float,
    start: SpinState | None,
    eta_index: int,
) -> SweepRecord:
    spin = SpinQuantum.parse(j)
    if spin.two_j < 2:
        raise ValueError(f"La recherche demande j ≥ 1 (reçu j={spin})")
    phis = np.atleast_1d(phi_values(angular_table(spin), float(eta)))

    starts = [
        _as_params(random_state(spin, _restart_seed(cfg, eta_index, r)))
        for r in range(cfg.restarts)
    ]
    if start is not None and cfg.warm_start:
        starts.append(_as_params(start))

    def run(x0):
        objective = _Objective(spin, phis, sign)
        x, value, converged = _local_search(objective, x0, cfg)
        return x, value, converged, objective.calls

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(x0) for x0 in starts]

    values = np.array([r[1] for r in results])
    best = int(np.argmin(values))
    x, _, converged, _ = results[best]
    hits = int(np.sum(values <= values[best] + HIT_TOLERANCE))

    state = SpinState(spin, x[:spin.dim] + 1j * x[spin.dim:])
    return SweepRecord(
        eta=float(eta),
        best_value=average_fidelity(state, float(eta)),
        best_state=state,
        profile=profile(state),
        restarts_hitting_best=hits,
        converged=converged,
        n_evaluations=sum(r[3] for r in results),
        mode="min" if sign > 0 else "max",
    )


def record_issues(record: SweepRecord, tol: float = 1e-12) -> list[str]:
    """Incohérences d'un enregistrement (valeur, profil, bornes) ; vide si OK."""
    issues = []
    value = average_fidelity(record.best_state, record.eta)
    if abs(value - record.best_value) > tol:
        issues.append(f"η={record.eta:.6f} : F stockée {record.best_value!r} ≠ {value!r}")
    if record.profile.distance(profile(record.best_state)) > 1e-9:
        issues.append(f"η={record.eta:.6f} : profil incohérent avec l'état")
    if not -1e-10 <= record.best_value <= 1 + 1e-10:
        issues.append(f"η={record.eta:.6f} : F = {record.best_value!r} hors [0, 1]")
    return issues


def minimize_fidelity(
    j,
    eta: float,
    cfg: SearchConfig = SearchConfig(),
    start: SpinState | None = None,
    eta_index: int = 0,
) -> SweepRecord:
    """Meilleur état (F minimale) à η fixé, multi-départ."""
    return _optimize(j, eta, cfg, 1.0, start, eta_index)


def maximize_fidelity(
    j,
    eta: float,
    cfg: SearchConfig = SearchConfig(),
    start: SpinState | None = None,
    eta_index: int = 0,
) -> SweepRecord:
    """Comme minimize_fidelity, objectif opposé."""
    return _optimize(j, eta, cfg, -1.0, start, eta_index)


# ── Balayage ────────────────────────────────────────────────────────────────

def _check_grid(etas) -> list[float]:
    grid = [float(e) for e in etas]
    if not grid:
        raise ValueError("Grille d'angles vide")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("La grille d'angles doit être strictement croissante")
    if grid[0] <= 0 or grid[-1] > math.pi + 1e-12:
        raise ValueError(f"Grille hors de ]0, π] : [{grid[0]}, {grid[-1]}]")
    return grid


def sweep(
    j,
    etas,
    cfg: SearchConfig = SearchConfig(),
    maximize: bool = False,
    stored: dict[int, SweepRecord] | None = None,
    on_record=None,
) -> list[SweepRecord]:
    """Optimise à chaque η de la grille.

    stored : enregistrements déjà calculés, indexés par position dans la grille
    (reprise depuis la base) ; ils ne sont pas recalculés mais alimentent le
    départ chaud. on_record(index, record) est appelé pour chaque nouveau point.
    """
    spin = SpinQuantum.parse(j)
    grid = _check_grid(etas)
    stored = stored or {}
    optimize = maximize_fidelity if maximize else minimize_fidelity
    records: list[SweepRecord] = []
    previous: SweepRecord | None = None

    for i, eta in enumerate(grid):
        if i in stored:
            record = stored[i]
        else:
            start = previous.best_state if previous is not None else None
            record = optimize(spin, eta, cfg, start=start, eta_index=i)
            if on_record is not None:
                on_record(i, record)
        records.append(record)
        previous = record
        prof = ", ".join(f"{a:.6f}" for a in record.profile.measures)
        print(
            f"[SWEEP] j={spin} η={eta:.6f} F={record.best_value:.9f} A=({prof}) "
            f"hits={record.restarts_hitting_best} ({i + 1}/{len(grid)})",
            file=sys.stderr,
        )
    return records


def detect_transitions(
    records: list[SweepRecord], threshold: float = TRANSITION_THRESHOLD
) -> list[tuple[int, int]]:
    """Paires (i, i+1) de points voisins dont les profils diffèrent de plus du seuil."""
    return [
        (i, i + 1)
        for i in range(len(records) - 1)
        if records[i].profile.distance(records[i + 1].profile) > threshold
    ]


def solve_transitions(
    table: AngularTable,
    records: list[SweepRecord],
    threshold: float = TRANSITION_THRESHOLD,
) -> tuple[list[CriticalAngle], list[tuple[float, float]]]:
    """Résout chaque transition détectée.

    Retourne (angles résolus, intervalles sans changement de signe). Une
    variation lisse du profil optimal donne un intervalle non résolu, pas une erreur.
    """
    solved, unresolved = [], []
    for i, k in detect_transitions(records, threshold):
        left, right = records[i], records[k]
        try:
            solved.append(critical_angle(table, left.profile, right.profile, (left.eta, right.eta)))
        except BracketError:
            print(
                f"[WARNING] Transition sans changement de signe sur "
                f"[{left.eta:.6f}, {right.eta:.6f}]",
                file=sys.stderr,
            )
            unresolved.append((left.eta, right.eta))
    return solved, unresolved


# ── Angles critiques et zéros ───────────────────────────────────────────────

def _root(fn, lo: float, hi: float) -> float:
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketError(
            f"Pas de changement de signe sur [{lo:.6f}, {hi:.6f}] "
            f"(g = {f_lo:.3e}, {f_hi:.3e})"
        )
    return brentq(fn, lo, hi, xtol=ROOT_XTOL, maxiter=200)


def critical_angle(
    table: AngularTable,
    profile1: AnticoherenceProfile,
    profile2: AnticoherenceProfile,
    bracket: tuple[float, float],
) -> CriticalAngle:
    """Racine de Σ_t φ_t(η)(A_t¹ − A_t²) dans l'intervalle donné."""
    lo, hi = sorted(float(b) for b in bracket)

    def g(eta):
        return critical_function(table, profile1.measures, profile2.measures, eta)

    root = _root(g, lo, hi)
    residual = abs(g(root))
    if residual >= RESIDUAL_LIMIT:
        raise BracketError(f"Résidu {residual:.3e} trop grand en η = {root:.12f}")
    return CriticalAngle(root, profile1, profile2, (lo, hi), residual)


def zeros_of(
    table: AngularTable,
    coeffs,
    count: int,
    step: float | None = None,
    upper: float = math.pi,
) -> list[float]:
    """Premiers zéros strictement positifs de Σ_{t≥1} c_t φ_t(η) sur ]0, upper].

    Balayage de signe (pas π/(40j) par défaut) puis Brent. Peut retourner
    moins de count zéros.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if step is None:
        step = math.pi / (40 * float(table.j.j))
    zeros_measures = np.zeros_like(coeffs)

    def g(eta):
        return critical_function(table, coeffs, zeros_measures, eta)

    grid = np.arange(step, upper + step / 2, step)
    grid[-1] = min(grid[-1], upper)
    values = g(grid)
    found: list[float] = []
    for i in range(len(grid) - 1):
        if len(found) >= count:
            break
        if values[i] == 0.0:
            found.append(float(grid[i]))
        elif values[i] * values[i + 1] < 0:
            found.append(float(brentq(g, grid[i], grid[i + 1], xtol=ROOT_XTOL, maxiter=200)))
    if len(found) < count and values[-1] == 0.0:
        found.append(float(grid[-1]))
    return found[:count]


def first_zero_phi1(table: AngularTable) -> float:
    """η₀ : premier zéro strictement positif de φ_1."""
    if table.j.floor_j < 1:
        raise ValueError(f"φ_1 n'existe pas pour j={table.j}")
    coeffs = np.zeros(table.j.floor_j)
    coeffs[0] = 1.0
    zeros = zeros_of(table, coeffs, 1)
    if not zeros:
        raise ArithmeticError(f"φ_1 ne s'annule pas sur ]0, π] pour j={table.j}")
    return zeros[0]


def negativity_window(table: AngularTable, points: int = 1000) -> bool:
    """Tous les φ_t (t ≥ 1) sont ≤ 0 sur ]0, η₀[."""
    if table.j.floor_j < 1:
        return True
    eta0 = first_zero_phi1(table)
    grid = np.linspace(0.0, eta0, points + 2)[1:-1]
    return all(
        np.all(phi(table, t, grid) <= NEGATIVITY_SLACK)
        for t in range(1, table.j.floor_j + 1)
    )


def eta0_scaling(j) -> Eta0Scaling:
    spin = SpinQuantum.parse(j)
    eta0 = first_zero_phi1(angular_table(spin))
    jj = float(spin.j)
    return Eta0Scaling(spin, eta0, eta0 * 4 * jj / (3 * math.pi), 9 / (4 * jj))
