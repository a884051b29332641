"""Rotosensor — fonctions angulaires φ_t(η) et fidélité moyenne.

La fidélité moyenne d'un état |ψ⟩ sous une rotation d'angle η autour d'un
axe aléatoire uniforme s'écrit

    F(η) = φ_0(η) + Σ_{t=1..⌊j⌋} φ_t(η) · A_t(ψ)

    φ_t(η) = Σ_k b_{t,k} · s^k · c^{N−k},   s = sin²(η/2), c = cos²(η/2)

avec des coefficients b_{t,k} rationnels exacts (table angulaire).

Trois routes indépendantes, qui doivent coïncider :
  1. forme close (table b_{t,k}) ;
  2. système linéaire sur les états de Dicke |j,m⟩, m = j…j−⌊j⌋, dont les
     fidélités viennent des caractères généralisés et des Clebsch-Gordan ;
  3. quadrature directe sur la sphère (Gauss-Legendre en cos θ × uniforme en φ).

Évaluation numérique : chaque série Σ_k b_k s^k c^{N−k} est convertie
exactement en série de cosinus Σ_r α_r cos(rη). À chaque η on garde la forme
(Bernstein/Horner en s ou cosinus) dont la borne d'arrondi est la plus faible :
la forme de Bernstein est exacte à l'ordre η^{2t} près de 0, la forme cosinus
évite la compensation des b_{t,k} alternés aux angles intermédiaires.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from roto_specfun import (
    SpinQuantum, as_doubled, clebsch_gordan_squared, generalized_character_squared, wigner_small_d,
)
from roto_state import SpinState, dicke_measure_exact, measures, profile

GENERATORS = ("identity", "square")


class SingularSystemError(ArithmeticError):
    """Système de Dicke non inversible."""

    def __init__(self, message: str, cond: float):
        super().__init__(message)
        self.cond = cond


def _comb(n: int, k: int) -> int:
    return math.comb(n, k) if 0 <= k <= n else 0


# ── Séries de Bernstein ─────────────────────────────────────────────────────

@lru_cache(maxsize=None)
def _cosine_basis(two_j: int) -> tuple[tuple[int, ...], ...]:
    """M[k][r] entiers tels que 4^N · s^k c^{N−k} = Σ_r M[k][r] cos(rη)."""
    n = two_j
    basis = []
    for k in range(n + 1):
        # (1−x)^k (1+x)^{N−k} en monômes de x = cos η
        poly = [
            sum((-1) ** i * _comb(k, i) * _comb(n - k, p - i) for i in range(p + 1))
            for p in range(n + 1)
        ]
        row = [0] * (n + 1)
        for p, coef in enumerate(poly):
            if coef == 0:
                continue
            # x^p = 2^{−p} Σ_i C(p,i) cos((p−2i)η)
            for i in range(p + 1):
                row[abs(p - 2 * i)] += coef * _comb(p, i) * 2 ** (n - p)
        basis.append(tuple(row))
    return tuple(basis)


def _bernstein_horner(coeffs: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Σ_k coeffs[k] s^k c^{N−k}, Horner sur le rapport min(s,c)/max(s,c) ≤ 1."""
    n = len(coeffs) - 1
    half = eta / 2
    s = np.sin(half) ** 2
    c = np.cos(half) ** 2
    low = s <= c
    base = np.where(low, c, s)
    ratio = np.where(low, s, c) / base
    acc_low = np.zeros_like(ratio)
    acc_high = np.zeros_like(ratio)
    for b in coeffs[::-1]:
        acc_low = acc_low * ratio + b
    for b in coeffs:
        acc_high = acc_high * ratio + b
    return base ** n * np.where(low, acc_low, acc_high)


class BernsteinSeries:
    """Polynôme trigonométrique Σ_k b_k s^k c^{N−k} à coefficients exacts."""

    def __init__(self, coeffs):
        self.exact = tuple(Fraction(b) for b in coeffs)
        self.two_j = len(self.exact) - 1
        self.coeffs = np.array([float(b) for b in self.exact])
        self.abs_coeffs = np.abs(self.coeffs)

    @cached_property
    def cosine(self) -> np.ndarray:
        basis = _cosine_basis(self.two_j)
        scale = 4 ** self.two_j
        alphas = []
        for r in range(self.two_j + 1):
            total = sum((b * basis[k][r] for k, b in enumerate(self.exact) if b), Fraction(0))
            alphas.append(float(total / scale))
        return np.array(alphas)

    @cached_property
    def cosine_bound(self) -> float:
        return float(np.sum(np.abs(self.cosine)))

    def __call__(self, eta):
        etas = np.asarray(eta, dtype=float)
        bern = _bernstein_horner(self.coeffs, etas)
        bern_bound = _bernstein_horner(self.abs_coeffs, etas)
        orders = np.arange(self.two_j + 1)
        cosine = np.cos(np.multiply.outer(etas, orders)) @ self.cosine
        value = np.where(bern_bound <= self.cosine_bound, bern, cosine)
        return float(value) if value.ndim == 0 else value


# ── Table angulaire ─────────────────────────────────────────────────────────

def coeff_a(j, t: int, k: int) -> Fraction:
    """a_{t,k} = 4^t (−1)^{k+t} C(2N,2k) C(k,t) C(2N−2t,N−t) / ((2k+1) C(2N,N))."""
    n = SpinQuantum.parse(j).two_j
    if not (0 <= t <= n and 0 <= k <= n):
        raise ValueError(f"(t, k) = ({t}, {k}) hors de [0, {n}]²")
    num = 4 ** t * (-1) ** (k + t) * _comb(2 * n, 2 * k) * _comb(k, t) * _comb(2 * n - 2 * t, n - t)
    return Fraction(num, (2 * k + 1) * _comb(2 * n, n))


@dataclass(frozen=True, eq=False)
class AngularTable:
    j: SpinQuantum
    b: tuple[tuple[Fraction, ...], ...]

    @cached_property
    def series(self) -> tuple[BernsteinSeries, ...]:
        return tuple(BernsteinSeries(row) for row in self.b)

    def rows(self) -> list[tuple[int, int, int, int]]:
        """(t, k, numérateur, dénominateur) pour l'export CSV."""
        return [
            (t, k, b.numerator, b.denominator)
            for t, row in enumerate(self.b)
            for k, b in enumerate(row)
        ]


@lru_cache(maxsize=None)
def _angular_table(two_j: int) -> AngularTable:
    spin = SpinQuantum(two_j)
    n = two_j
    rows = [tuple(Fraction(_comb(n, k), 2 * k + 1) for k in range(n + 1))]
    for t in range(1, spin.floor_j + 1):
        half = Fraction(1, 2) if 2 * t == n else Fraction(1)
        rows.append(tuple(
            -Fraction(t, t + 1) * (coeff_a(spin, t, k) + coeff_a(spin, n - t, k)) * half
            for k in range(n + 1)
        ))
    return AngularTable(spin, tuple(rows))


def angular_table(j) -> AngularTable:
    return _angular_table(SpinQuantum.parse(j).two_j)


def phi(table: AngularTable, t: int, eta):
    if not 0 <= t <= table.j.floor_j:
        raise ValueError(f"t hors domaine [0, {table.j.floor_j}] : {t}")
    return table.series[t](eta)


def phi_values(table: AngularTable, eta) -> np.ndarray:
    """(φ_0, …, φ_⌊j⌋) ; forme (⌊j⌋+1,) ou (⌊j⌋+1, len(eta))."""
    return np.array([series(eta) for series in table.series])


def fidelity_from_measures(table: AngularTable, values, eta):
    """φ_0 + Σ φ_t A_t pour un vecteur de mesures donné."""
    phis = phi_values(table, eta)
    weights = np.concatenate(([1.0], np.asarray(values, dtype=float)))
    result = np.tensordot(weights, phis, axes=1)
    return float(result) if np.ndim(result) == 0 else result


def average_fidelity(state: SpinState, eta):
    return fidelity_from_measures(angular_table(state.j), measures(state), eta)


def critical_function(table: AngularTable, measures1, measures2, eta):
    """g(η) = Σ_t φ_t(η) (A_t¹ − A_t²)."""
    first = np.asarray(measures1, dtype=float)
    second = np.asarray(measures2, dtype=float)
    for values in (first, second):
        if values.shape != (table.j.floor_j,):
            raise ValueError(
                f"j={table.j} attend {table.j.floor_j} mesures par profil, reçu {values.shape}"
            )
    diff = first - second
    result = np.tensordot(np.concatenate(([0.0], diff)), phi_values(table, eta), axes=1)
    return float(result) if np.ndim(result) == 0 else result


# ── Formes non réduites (contrôles croisés) ────────────────────────────────

def fidelity_from_purities(state: SpinState, eta):
    """Σ_k s^k c^{N−k} Σ_{t=0..N} a_{t,k} tr ρ_t² (double somme complète)."""
    n = state.j.two_j
    purities = [Fraction(p) for p in profile(state).purities]
    coeffs = [
        sum((coeff_a(state.j, t, k) * purities[t] for t in range(k + 1)), Fraction(0))
        for k in range(n + 1)
    ]
    return BernsteinSeries(coeffs)(eta)


@lru_cache(maxsize=None)
def _reduced_weights(two_j: int) -> tuple[tuple[Fraction, ...], ...]:
    n = two_j
    norm = (2 * n + 1) * _comb(2 * n, n)
    return tuple(
        tuple(
            Fraction((-4) ** t * _comb(2 * n - 2 * t, n - t) * (-1) ** k
                     * _comb(2 * n + 1, 2 * k + 1) * _comb(k, t), norm)
            for k in range(n + 1)
        )
        for t in range(n + 1)
    )


def reduced_form_fidelity(state: SpinState, eta):
    """Forme réduite à poids C(2N+1,2k+1) C(k,t)."""
    n = state.j.two_j
    weights = _reduced_weights(n)
    purities = [Fraction(p) for p in profile(state).purities]
    coeffs = [
        sum((weights[t][k] * purities[t] for t in range(k + 1)), Fraction(0))
        for k in range(n + 1)
    ]
    return BernsteinSeries(coeffs)(eta)


def combinatorial_identity_check(n: int, k: int) -> bool:
    """Σ_{s,q} 2^s C(k,s) C(k−s,q) C(2N−2k, N−s−2q) = C(2N,N), en entiers."""
    if not 0 <= k <= n:
        raise ValueError(f"k hors domaine [0, {n}] : {k}")
    total = sum(
        2 ** s * _comb(k, s) * _comb(k - s, q) * _comb(2 * n - 2 * k, n - s - 2 * q)
        for s in range(k + 1)
        for q in range(k - s + 1)
    )
    return total == _comb(2 * n, n)


# ── Route Dicke ─────────────────────────────────────────────────────────────

@lru_cache(maxsize=None)
def _dicke_series(two_j: int, tm: int) -> BernsteinSeries:
    """F_{|j,m⟩} en série exacte : Σ_λ (2λ+1) (C^{jm}_{jm λ0})² χ_λ² / (2j+1)²."""
    spin = SpinQuantum(two_j)
    mm = Fraction(tm, 2)
    coeffs = [Fraction(0)] * (two_j + 1)
    for lam in range(two_j + 1):
        cg2 = clebsch_gordan_squared(spin.j, mm, lam, 0, spin.j, mm)
        if cg2 == 0:
            continue
        for k, b in enumerate(generalized_character_squared(two_j, lam)):
            coeffs[k] += (2 * lam + 1) * cg2 * b
    return BernsteinSeries(c / spin.dim ** 2 for c in coeffs)


def dicke_average_fidelity(j, m, eta):
    """F_{|j,m⟩}(η) = (2j+1)^{−2} Σ_ℓ (2ℓ+1) (C^{jm}_{jm ℓ0} χ_ℓ^j(η))²."""
    spin = SpinQuantum.parse(j)
    tm = as_doubled(m, "m")
    if abs(tm) > spin.two_j or (spin.two_j - tm) % 2:
        raise ValueError(f"m={m} invalide pour j={spin}")
    return _dicke_series(spin.two_j, tm)(eta)


def _dicke_system(two_j: int) -> list[list[Fraction]]:
    """Lignes [1, A_1, …, A_⌊j⌋] exactes des états |j, j−i⟩, i = 0…⌊j⌋."""
    spin = SpinQuantum(two_j)
    return [
        [Fraction(1)] + [dicke_measure_exact(spin, Fraction(two_j - 2 * i, 2), t)
                         for t in range(1, spin.floor_j + 1)]
        for i in range(spin.floor_j + 1)
    ]


def _solve_exact(matrix: list[list[Fraction]], rhs: list[list[Fraction]]) -> list[list[Fraction]] | None:
    """Gauss-Jordan en rationnels ; None si la matrice est singulière."""
    size = len(matrix)
    rows = [list(a) + list(b) for a, b in zip(matrix, rhs)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if rows[r][col] != 0), None)
        if pivot is None:
            return None
        rows[col], rows[pivot] = rows[pivot], rows[col]
        lead = rows[col][col]
        rows[col] = [v / lead for v in rows[col]]
        for r in range(size):
            factor = rows[r][col]
            if r != col and factor != 0:
                rows[r] = [v - factor * p for v, p in zip(rows[r], rows[col])]
    return [row[size:] for row in rows]


@lru_cache(maxsize=None)
def _dicke_phi_series(two_j: int) -> tuple[BernsteinSeries, ...]:
    spin = SpinQuantum(two_j)
    matrix = _dicke_system(two_j)
    rhs = [list(_dicke_series(two_j, two_j - 2 * i).exact) for i in range(spin.floor_j + 1)]
    solution = _solve_exact(matrix, rhs)
    if solution is None:
        cond = float(np.linalg.cond(np.array(matrix, dtype=float)))
        raise SingularSystemError(
            f"Système de Dicke singulier pour j={spin} (conditionnement {cond:.3e})", cond
        )
    return tuple(BernsteinSeries(row) for row in solution)


def dicke_phi_series(j) -> tuple[BernsteinSeries, ...]:
    """Séries exactes des φ_t tirées du système de Dicke."""
    return _dicke_phi_series(SpinQuantum.parse(j).two_j)


def phi_via_dicke(j, eta) -> np.ndarray:
    """φ_0…φ_⌊j⌋ solutions du système linéaire sur |j,m⟩, m = j…j−⌊j⌋.

    Le système est résolu en rationnels : les φ_t obtenus sont des séries
    exactes, évaluées comme celles de la table angulaire.
    """
    return np.array([series(eta) for series in dicke_phi_series(j)])


# ── Quadrature sphérique ────────────────────────────────────────────────────

@dataclass(frozen=True)
class QuadratureGrid:
    """Gauss-Legendre en cos θ (n_theta nœuds) × uniforme en φ (n_phi nœuds)."""

    n_theta: int
    n_phi: int

    def __post_init__(self):
        if self.n_theta < 1 or self.n_phi < 1:
            raise ValueError(f"Grille vide : ({self.n_theta}, {self.n_phi})")

    @classmethod
    def for_degree(cls, two_j: int, p: int = 1) -> "QuadratureGrid":
        """Grille par défaut pour un intégrande de degré 2Np (un nœud de marge)."""
        n = two_j * p
        return cls(n + 2, 2 * n + 2)

    def is_exact_for(self, degree_half: int) -> bool:
        """Exacte pour les polynômes sphériques de degré ≤ 2·degree_half."""
        return self.n_theta >= degree_half + 1 and self.n_phi >= 2 * degree_half + 1

    @cached_property
    def thetas(self) -> np.ndarray:
        x, _ = np.polynomial.legendre.leggauss(self.n_theta)
        return np.arccos(x)

    @cached_property
    def phis(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_phi) / self.n_phi

    @cached_property
    def weights(self) -> np.ndarray:
        # (1/4π) · w_i · (2π/n_phi) ; somme = 1
        _, w = np.polynomial.legendre.leggauss(self.n_theta)
        return np.repeat(w[:, None] / (2 * self.n_phi), self.n_phi, axis=1)


def _populations(state: SpinState, grid: QuadratureGrid) -> np.ndarray:
    """|(U†ψ)_m|² pour chaque nœud (θ, φ), U = e^{−iφJz} e^{−iθJy}."""
    m = state.j.m_values()
    phased = state.amps[None, :] * np.exp(1j * np.outer(grid.phis, m))
    pops = np.empty((grid.n_theta, grid.n_phi, state.j.dim))
    for i, theta in enumerate(grid.thetas):
        pops[i] = np.abs(phased @ wigner_small_d(state.j, theta)) ** 2
    return pops


def _average_overlap(pops, grid: QuadratureGrid, spectrum: np.ndarray, eta, p: int):
    etas = np.asarray(eta, dtype=float)
    flat = np.atleast_1d(etas)
    phases = np.exp(-1j * np.outer(flat, spectrum))
    overlap = np.einsum("abm,em->eab", pops, phases)
    values = np.einsum("eab,ab->e", np.abs(overlap) ** (2 * p), grid.weights)
    return float(values[0]) if etas.ndim == 0 else values.reshape(etas.shape)


def _checked_grid(grid: QuadratureGrid | None, two_j: int, p: int) -> QuadratureGrid:
    if grid is None:
        return QuadratureGrid.for_degree(two_j, p)
    if not grid.is_exact_for(two_j * p):
        raise ValueError(
            f"Grille ({grid.n_theta}, {grid.n_phi}) trop petite : "
            f"il faut n_theta ≥ {two_j * p + 1} et n_phi ≥ {2 * two_j * p + 1}"
        )
    return grid


def quadrature_fidelity(state: SpinState, eta, grid: QuadratureGrid | None = None):
    """(4π)^{−1} ∮ |⟨ψ|R_n(η)|ψ⟩|² dn par quadrature produit."""
    grid = _checked_grid(grid, state.j.two_j, 1)
    return _average_overlap(_populations(state, grid), grid, state.j.m_values(), eta, 1)


def generalized_quadrature_fidelity(
    state: SpinState,
    eta,
    p: int = 1,
    f: str = "identity",
    grid: QuadratureGrid | None = None,
):
    """(4π)^{−1} ∮ |⟨ψ|e^{−iη f(J·n)}|ψ⟩|^{2p} dn, f ∈ {identity, square}."""
    if f not in GENERATORS:
        raise ValueError(f"f non supportée : {f!r} (attendu {', '.join(GENERATORS)})")
    if p < 1:
        raise ValueError(f"L'exposant p doit être ≥ 1 : {p}")
    grid = _checked_grid(grid, state.j.two_j, p)
    m = state.j.m_values()
    spectrum = m if f == "identity" else m ** 2
    return _average_overlap(_populations(state, grid), grid, spectrum, eta, p)


def averaged_variance(state: SpinState, grid: QuadratureGrid | None = None) -> float:
    """V = (4π)^{−1} ∮ (⟨J_n²⟩ − ⟨J_n⟩²) dn."""
    grid = _checked_grid(grid, state.j.two_j, 1)
    pops = _populations(state, grid)
    m = state.j.m_values()
    first = pops @ m
    second = pops @ (m ** 2)
    return float(np.sum((second - first ** 2) * grid.weights))


# ── Courbes ─────────────────────────────────────────────────────────────────

ROUTES = ("closed", "quadrature", "purities")


def fidelity_curve(state: SpinState, etas, route: str = "closed") -> np.ndarray:
    etas = np.asarray(etas, dtype=float)
    if route == "closed":
        return np.atleast_1d(average_fidelity(state, etas))
    if route == "quadrature":
        return np.atleast_1d(quadrature_fidelity(state, etas))
    if route == "purities":
        return np.atleast_1d(fidelity_from_purities(state, etas))
    raise ValueError(f"Route inconnue : {route!r} (attendu {', '.join(ROUTES)})")
