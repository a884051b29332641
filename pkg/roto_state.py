"""Rotosensor — états purs de spin j dans la base de Dicke.

Un état est un vecteur d'amplitudes c_m rangé par m décroissant
(amps[0] = c_j, amps[N] = c_{−j}), normalisé une fois pour toutes à la
construction puis figé.

Puretés des réductions : le N-qubit symétrisé associé à |ψ⟩ est réduit à
t qubits, et tr[ρ_t²] se calcule directement sur les c_m :

    tr ρ_t² = Σ_{q,ℓ=0..t} | Σ_{k=0..N−t} c̄_{j−k−ℓ} c_{j−k−q} Γ_k^{ℓq} |²

    Γ_k^{ℓq} = sqrt(C(N−k−q, t−q) C(N−k−ℓ, t−ℓ) C(k+q, k) C(k+ℓ, k)) / C(N, t)

Les Γ dépendent seulement de (N, t) et sont mis en cache.
"""

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from roto_specfun import SpinQuantum, as_doubled, rotation_matrix, spin_operators

NORM_FLOOR = 1e-10
MEASURE_SLACK = 1e-12


class StateError(ValueError):
    """Vecteur d'état mal formé ou non normalisable."""


# ── Types ───────────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class SpinState:
    j: SpinQuantum
    amps: np.ndarray

    def __post_init__(self):
        try:
            spin = SpinQuantum.parse(self.j)
        except ValueError as exc:
            raise StateError(str(exc)) from None
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        if amps.shape[0] != spin.dim:
            raise StateError(
                f"j={spin} attend {spin.dim} amplitudes, reçu {amps.shape[0]}"
            )
        if not np.all(np.isfinite(amps)):
            raise StateError("Amplitudes non finies")
        norm = float(np.linalg.norm(amps))
        if norm < NORM_FLOOR:
            raise StateError(f"Vecteur non normalisable (norme {norm:.3e})")
        amps = amps / norm
        amps.setflags(write=False)
        object.__setattr__(self, "j", spin)
        object.__setattr__(self, "amps", amps)

    # ── Sérialisation {"two_j", "re", "im"} ──

    def to_dict(self) -> dict:
        return {
            "two_j": self.j.two_j,
            "re":    [float(v) for v in self.amps.real],
            "im":    [float(v) for v in self.amps.imag],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpinState":
        missing = [k for k in ("two_j", "re", "im") if k not in data]
        if missing:
            raise StateError(f"Clés manquantes dans l'état JSON : {missing}")
        re, im = data["re"], data["im"]
        if len(re) != len(im):
            raise StateError(f"re/im de longueurs différentes : {len(re)} ≠ {len(im)}")
        two_j = data["two_j"]
        if not isinstance(two_j, int) or two_j < 1:
            raise StateError(f"two_j invalide : {two_j!r}")
        return cls(SpinQuantum(two_j), np.asarray(re, float) + 1j * np.asarray(im, float))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "SpinState":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise StateError(f"JSON d'état illisible : {exc}") from None
        return cls.from_dict(data)


@dataclass(frozen=True)
class AnticoherenceProfile:
    """Puretés tr ρ_t² (t = 0…N) et mesures A_t (t = 1…⌊j⌋)."""

    j: SpinQuantum
    purities: tuple[float, ...]
    measures: tuple[float, ...]

    @classmethod
    def from_measures(cls, j, measures) -> "AnticoherenceProfile":
        """Profil reconstruit à partir des seules mesures A_1…A_⌊j⌋.

        tr ρ_t² = 1 − t/(t+1)·A_t pour t ≤ ⌊j⌋, puis symétrie t ↔ N−t.
        """
        spin = SpinQuantum.parse(j)
        measures = tuple(float(a) for a in measures)
        if len(measures) != spin.floor_j:
            raise ValueError(
                f"j={spin} attend {spin.floor_j} mesures, reçu {len(measures)}"
            )
        low = [1.0] + [1.0 - t / (t + 1) * a for t, a in enumerate(measures, start=1)]
        purities = [low[t] if t <= spin.floor_j else low[spin.two_j - t]
                    for t in range(spin.dim)]
        return cls(spin, tuple(purities), measures)

    def distance(self, other: "AnticoherenceProfile") -> float:
        """max_t |A_t − A'_t| ; 0 pour j = 1/2."""
        if self.j != other.j:
            raise ValueError(f"Profils de spins différents : {self.j} ≠ {other.j}")
        if not self.measures:
            return 0.0
        return max(abs(a - b) for a, b in zip(self.measures, other.measures))

    def violations(self, tol: float = 1e-10) -> list[str]:
        """Liste (vide si tout va bien) des invariants de profil violés."""
        n = self.j.two_j
        issues = []
        if abs(self.purities[0] - 1.0) > tol:
            issues.append(f"tr ρ_0² = {self.purities[0]!r} ≠ 1")
        for t, p in enumerate(self.purities):
            if abs(p - self.purities[n - t]) > tol:
                issues.append(f"tr ρ_{t}² ≠ tr ρ_{n - t}²")
            if p < 1 / (t + 1) - tol or p > 1 + tol:
                issues.append(f"tr ρ_{t}² = {p!r} hors [1/{t + 1}, 1]")
        for t, a in enumerate(self.measures, start=1):
            if a < -MEASURE_SLACK or a > 1 + MEASURE_SLACK:
                issues.append(f"A_{t} = {a!r} hors [0, 1]")
        return issues


@dataclass(frozen=True)
class KappaInvariants:
    values: tuple[float, ...]


# ── Puretés et mesures ──────────────────────────────────────────────────────

@lru_cache(maxsize=None)
def _purity_weights(two_j: int, t: int) -> np.ndarray:
    n = two_j
    norm = math.comb(n, t)
    gamma = np.zeros((t + 1, t + 1, n - t + 1))
    for l in range(t + 1):
        for q in range(t + 1):
            for k in range(n - t + 1):
                prod = (
                    math.comb(n - k - q, t - q) * math.comb(n - k - l, t - l)
                    * math.comb(k + q, k) * math.comb(k + l, k)
                )
                gamma[l, q, k] = math.sqrt(prod) / norm
    gamma.setflags(write=False)
    return gamma


@lru_cache(maxsize=None)
def _shift_index(two_j: int, t: int) -> np.ndarray:
    # shift[ℓ, k] = k + ℓ
    return np.arange(t + 1)[:, None] + np.arange(two_j - t + 1)[None, :]


def purity(state: SpinState, t: int) -> float:
    n = state.j.two_j
    if not 0 <= t <= n:
        raise ValueError(f"t hors domaine [0, {n}] : {t}")
    shifted = state.amps[_shift_index(n, t)]
    overlap = np.einsum("lk,qk,lqk->lq", shifted.conj(), shifted, _purity_weights(n, t))
    return float(np.sum(np.abs(overlap) ** 2))


def anticoherence_measure(state: SpinState, t: int) -> float:
    """A_t = (t+1)/t · (1 − tr ρ_t²)."""
    if not 1 <= t <= state.j.floor_j:
        raise ValueError(f"t hors domaine [1, {state.j.floor_j}] : {t}")
    return (t + 1) / t * (1.0 - purity(state, t))


def measures(state: SpinState) -> tuple[float, ...]:
    return tuple(anticoherence_measure(state, t) for t in range(1, state.j.floor_j + 1))


@dataclass(frozen=True, eq=False)
class MeasureKernel:
    """A_1…A_⌊j⌋ d'un vecteur normalisé en une passe, sans construire de SpinState.

    Les doubles sommes de toutes les puretés sont aplaties : chaque terme
    c̄[left] c[right] Γ est accumulé dans sa case (t, ℓ, q) puis chaque case
    au carré dans son ordre t.
    """
    two_j: int
    left: np.ndarray
    right: np.ndarray
    weights: np.ndarray
    slot: np.ndarray
    slot_order: np.ndarray
    factors: np.ndarray

    def measures(self, amps: np.ndarray) -> np.ndarray:
        prod = amps.conj()[self.left] * amps[self.right] * self.weights
        n_slots = len(self.slot_order)
        overlap = (np.bincount(self.slot, prod.real, n_slots)
                   + 1j * np.bincount(self.slot, prod.imag, n_slots))
        purities = np.bincount(self.slot_order, np.abs(overlap) ** 2, len(self.factors))
        return self.factors * (1.0 - purities)


@lru_cache(maxsize=None)
def measure_kernel(two_j: int) -> MeasureKernel:
    left, right, weights, slot, slot_order = [], [], [], [], []
    for t in range(1, two_j // 2 + 1):
        gamma = _purity_weights(two_j, t)
        for l in range(t + 1):
            for q in range(t + 1):
                index = len(slot_order)
                for k in range(two_j - t + 1):
                    left.append(k + l)
                    right.append(k + q)
                    weights.append(gamma[l, q, k])
                    slot.append(index)
                slot_order.append(t - 1)
    factors = np.array([(t + 1) / t for t in range(1, two_j // 2 + 1)])
    return MeasureKernel(
        two_j, np.array(left, dtype=int), np.array(right, dtype=int), np.array(weights),
        np.array(slot, dtype=int), np.array(slot_order, dtype=int), factors,
    )


def profile(state: SpinState) -> AnticoherenceProfile:
    purities = tuple(purity(state, t) for t in range(state.j.dim))
    values = tuple((t + 1) / t * (1.0 - purities[t]) for t in range(1, state.j.floor_j + 1))
    return AnticoherenceProfile(state.j, purities, values)


def dicke_measure_exact(j, m, t: int) -> Fraction:
    spin = SpinQuantum.parse(j)
    n = spin.two_j
    tm = as_doubled(m, "m")
    if abs(tm) > n or (n - tm) % 2:
        raise ValueError(f"m={m} invalide pour j={spin}")
    if not 1 <= t <= n:
        raise ValueError(f"t hors domaine [1, {n}] : {t}")
    up, down = (n + tm) // 2, (n - tm) // 2          # j+m, j−m
    total = sum(
        math.comb(up, t - l) ** 2 * math.comb(down, l) ** 2 for l in range(t + 1)
    )
    return Fraction(t + 1, t) * (1 - Fraction(total, math.comb(n, t) ** 2))


def dicke_measure(j, m, t: int) -> float:
    """A_t(|j,m⟩) en forme close (somme binomiale)."""
    return float(dicke_measure_exact(j, m, t))


# ── Invariants κ_r ──────────────────────────────────────────────────────────

def kappa(prof: AnticoherenceProfile) -> KappaInvariants:
    """κ_r = Σ_{t≤r} (−1)^{t+r} 2^t C(r,t) tr ρ_t²."""
    p = prof.purities
    values = tuple(
        sum((-1) ** (t + r) * 2 ** t * math.comb(r, t) * p[t] for t in range(r + 1))
        for r in range(len(p))
    )
    return KappaInvariants(values)


def purities_from_kappa(inv: KappaInvariants) -> tuple[float, ...]:
    """Relation inverse : tr ρ_t² = 2^{−t} Σ_{r≤t} C(t,r) κ_r."""
    k = inv.values
    return tuple(
        sum(math.comb(t, r) * k[r] for r in range(t + 1)) / 2 ** t
        for t in range(len(k))
    )


# ── Constructeurs et transformations ───────────────────────────────────────

def dicke_state(j, m) -> SpinState:
    spin = SpinQuantum.parse(j)
    tm = as_doubled(m, "m")
    if abs(tm) > spin.two_j or (spin.two_j - tm) % 2:
        raise StateError(f"m={m} invalide pour j={spin}")
    amps = np.zeros(spin.dim, dtype=complex)
    amps[(spin.two_j - tm) // 2] = 1.0
    return SpinState(spin, amps)


def random_state(j, seed) -> SpinState:
    """État de Haar : gaussiennes complexes indépendantes, normalisées."""
    spin = SpinQuantum.parse(j)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(spin.dim) + 1j * rng.standard_normal(spin.dim)
    return SpinState(spin, z)


def rotate(state: SpinState, eta: float, axis) -> SpinState:
    return SpinState(state.j, rotation_matrix(state.j, eta, axis) @ state.amps)


def mean_spin(state: SpinState) -> np.ndarray:
    """⟨J⟩ = (⟨Jx⟩, ⟨Jy⟩, ⟨Jz⟩)."""
    psi = state.amps
    return np.array([float(np.real(psi.conj() @ op @ psi)) for op in spin_operators(state.j)])


def named_state(state_id: str, j, chi: float = 0.0) -> SpinState:
    """État du catalogue (state_catalog.yaml)."""
    from roto_catalog import build_state
    return build_state(state_id, j, chi=chi)
