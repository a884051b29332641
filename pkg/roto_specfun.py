"""Rotosensor — combinatoire exacte et fonctions spéciales.

Tout ce que les autres modules consomment :
  - binomiaux exacts (Fraction) ;
  - coefficients de Clebsch-Gordan (somme de Racah en rationnels exacts,
    racine carrée prise une seule fois) et leurs carrés exacts ;
  - polynômes de Jacobi par récurrence à trois termes (flottants ou coefficients exacts) ;
  - caractères χ^j(η), caractères généralisés χ_λ^j(η) et leurs carrés en série exacte ;
  - matrices de Wigner d^j(θ) et matrices de rotation e^{-iη J·n}.

Convention : un vecteur ou une matrice de spin j est indexé par i = 0…N
(N = 2j) avec m = j − i. |j,j⟩ est donc toujours la première composante.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

AXIS_TOLERANCE = 1e-12


# ── Nombre quantique de spin ────────────────────────────────────────────────

@dataclass(frozen=True, order=True)
class SpinQuantum:
    """Spin j stocké sous la forme N = 2j (entier)."""

    two_j: int

    def __post_init__(self):
        if isinstance(self.two_j, bool) or not isinstance(self.two_j, (int, np.integer)):
            raise ValueError(f"two_j doit être un entier : {self.two_j!r}")
        if self.two_j < 0:
            raise ValueError(f"two_j doit être ≥ 0 : {self.two_j}")
        object.__setattr__(self, "two_j", int(self.two_j))

    @classmethod
    def parse(cls, value) -> "SpinQuantum":
        """Accepte "5/2", "3", "2.5", un int, une Fraction ou un SpinQuantum."""
        if isinstance(value, SpinQuantum):
            return value
        try:
            j = Fraction(str(value).strip())
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"Spin illisible : {value!r}") from None
        doubled = 2 * j
        if doubled.denominator != 1 or doubled <= 0:
            raise ValueError(f"j doit être un demi-entier strictement positif : {value!r}")
        return cls(int(doubled))

    @property
    def j(self) -> Fraction:
        return Fraction(self.two_j, 2)

    @property
    def dim(self) -> int:
        return self.two_j + 1

    @property
    def floor_j(self) -> int:
        return self.two_j // 2

    def m_values(self) -> np.ndarray:
        """m = j, j−1, …, −j (ordre des amplitudes)."""
        return self.two_j / 2 - np.arange(self.dim, dtype=float)

    def __str__(self) -> str:
        return str(self.j)


def as_doubled(value, name: str = "m") -> int:
    """Convertit un demi-entier (int, Fraction, float, "3/2") en 2·value."""
    if isinstance(value, SpinQuantum):
        return value.two_j
    try:
        frac = Fraction(value) if not isinstance(value, str) else Fraction(value.strip())
    except (TypeError, ValueError, ZeroDivisionError):
        raise ValueError(f"{name} illisible : {value!r}") from None
    doubled = 2 * frac
    if doubled.denominator != 1:
        raise ValueError(f"{name} n'est pas un demi-entier : {value!r}")
    return int(doubled)


# ── Combinatoire exacte ─────────────────────────────────────────────────────

def binomial_exact(n: int, k: int) -> Fraction:
    if n < 0:
        raise ValueError(f"n doit être ≥ 0 : {n}")
    if k < 0 or k > n:
        return Fraction(0)
    return Fraction(math.comb(n, k))


def double_factorial_ratio(two_j: int) -> Fraction:
    """(2N+2)!! / (2·(2N+1)!!), préfacteur exact du caractère."""
    n = two_j
    even = 2 ** (n + 1) * math.factorial(n + 1)          # (2N+2)!!
    return Fraction(even * even, 2 * math.factorial(2 * n + 2))


# ── Clebsch-Gordan ──────────────────────────────────────────────────────────

def _doubled_cg_args(j1, m1, j2, m2, J, M) -> tuple[int, ...] | None:
    """Arguments doublés validés ; None si le coefficient est nul par sélection."""
    tj1, tm1 = as_doubled(j1, "j1"), as_doubled(m1, "m1")
    tj2, tm2 = as_doubled(j2, "j2"), as_doubled(m2, "m2")
    tJ, tM = as_doubled(J, "J"), as_doubled(M, "M")

    for tj, label in ((tj1, "j1"), (tj2, "j2"), (tJ, "J")):
        if tj < 0:
            raise ValueError(f"{label} doit être ≥ 0")
    for tj, tm, label in ((tj1, tm1, "j1/m1"), (tj2, tm2, "j2/m2"), (tJ, tM, "J/M")):
        if (tj - tm) % 2:
            raise ValueError(f"Mélange entier/demi-entier incohérent : {label}")
    if (tj1 + tj2 + tJ) % 2:
        raise ValueError("j1 + j2 + J doit être entier")

    if tM != tm1 + tm2:
        return None
    if abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tM) > tJ:
        return None
    if not abs(tj1 - tj2) <= tJ <= tj1 + tj2:
        return None
    return tj1, tm1, tj2, tm2, tJ, tM


def clebsch_gordan(j1, m1, j2, m2, J, M) -> float:
    """⟨j1 m1; j2 m2 | J M⟩, convention de Condon-Shortley.

    Les arguments sont des demi-entiers (int, Fraction, float exact ou "3/2").
    Renvoie 0 si M ≠ m1 + m2, si un |m| dépasse son j ou si l'inégalité
    triangulaire échoue. Lève ValueError sur un mélange entier/demi-entier.
    """
    args = _doubled_cg_args(j1, m1, j2, m2, J, M)
    if args is None:
        return 0.0
    squared_prefactor, total = _racah_terms(*args)
    if total == 0:
        return 0.0
    return math.copysign(math.sqrt(squared_prefactor * total * total), total)


def clebsch_gordan_squared(j1, m1, j2, m2, J, M) -> Fraction:
    """⟨j1 m1; j2 m2 | J M⟩² en rationnel exact."""
    args = _doubled_cg_args(j1, m1, j2, m2, J, M)
    if args is None:
        return Fraction(0)
    squared_prefactor, total = _racah_terms(*args)
    return squared_prefactor * total * total


@lru_cache(maxsize=None)
def _racah_terms(tj1: int, tm1: int, tj2: int, tm2: int, tJ: int, tM: int) -> tuple[Fraction, Fraction]:
    """(préfacteur², somme alternée) ; le coefficient vaut sqrt(préfacteur²) × somme."""
    f = math.factorial
    k1 = (tj1 + tj2 - tJ) // 2
    k2 = (tj1 - tm1) // 2
    k3 = (tj2 + tm2) // 2
    k4 = (tJ - tj2 + tm1) // 2
    k5 = (tJ - tj1 - tm2) // 2

    squared_prefactor = Fraction(
        (tJ + 1) * f((tJ + tj1 - tj2) // 2) * f((tJ - tj1 + tj2) // 2) * f(k1),
        f((tj1 + tj2 + tJ) // 2 + 1),
    )
    squared_prefactor *= (
        f((tJ + tM) // 2) * f((tJ - tM) // 2)
        * f((tj1 - tm1) // 2) * f((tj1 + tm1) // 2)
        * f((tj2 - tm2) // 2) * f((tj2 + tm2) // 2)
    )

    total = Fraction(0)
    for k in range(max(0, -k4, -k5), min(k1, k2, k3) + 1):
        denom = f(k) * f(k1 - k) * f(k2 - k) * f(k3 - k) * f(k4 + k) * f(k5 + k)
        total += Fraction((-1) ** k, denom)

    return squared_prefactor, total


# ── Jacobi et caractères ────────────────────────────────────────────────────

def jacobi_poly(n: int, alpha: float, beta: float, x):
    """P_n^{(α,β)}(x) par récurrence à trois termes (scalaire ou tableau numpy)."""
    if n < 0:
        raise ValueError(f"Degré négatif : {n}")
    x = np.asarray(x, dtype=float) if not np.isscalar(x) else float(x)
    if n == 0:
        return np.ones_like(x) if isinstance(x, np.ndarray) else 1.0
    apb = alpha + beta
    p_prev = np.ones_like(x) if isinstance(x, np.ndarray) else 1.0
    p = 0.5 * (alpha - beta + (apb + 2.0) * x)
    for k in range(2, n + 1):
        a1 = 2.0 * k * (k + apb) * (2.0 * k + apb - 2.0)
        a2 = (2.0 * k + apb - 1.0) * (alpha * alpha - beta * beta)
        a3 = (2.0 * k + apb - 2.0) * (2.0 * k + apb - 1.0) * (2.0 * k + apb)
        a4 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * (2.0 * k + apb)
        p, p_prev = ((a2 + a3 * x) * p - a4 * p_prev) / a1, p
    return p


def jacobi_coefficients(n: int, alpha, beta) -> tuple[Fraction, ...]:
    """Coefficients exacts de P_n^{(α,β)}(x) dans la base 1, x, …, x^n (α, β rationnels)."""
    if n < 0:
        raise ValueError(f"Degré négatif : {n}")
    alpha, beta = Fraction(alpha), Fraction(beta)
    apb = alpha + beta
    p_prev = [Fraction(1)]
    if n == 0:
        return tuple(p_prev)
    p = [(alpha - beta) / 2, (apb + 2) / 2]
    for k in range(2, n + 1):
        a1 = 2 * k * (k + apb) * (2 * k + apb - 2)
        a2 = (2 * k + apb - 1) * (alpha * alpha - beta * beta)
        a3 = (2 * k + apb - 2) * (2 * k + apb - 1) * (2 * k + apb)
        a4 = 2 * (k + alpha - 1) * (k + beta - 1) * (2 * k + apb)
        nxt = [Fraction(0)] * (k + 1)
        for i, c in enumerate(p):
            nxt[i] += a2 * c
            nxt[i + 1] += a3 * c
        for i, c in enumerate(p_prev):
            nxt[i] -= a4 * c
        p, p_prev = [c / a1 for c in nxt], p
    return tuple(p)


def character(j, eta):
    """χ^j(η) = (4j+2)!!/(2(4j+1)!!) · P_{2j}^{(1/2,1/2)}(cos(η/2))."""
    spin = SpinQuantum.parse(j)
    x = np.cos(np.asarray(eta, dtype=float) / 2)
    value = float(double_factorial_ratio(spin.two_j)) * jacobi_poly(spin.two_j, 0.5, 0.5, x)
    return float(value) if np.ndim(value) == 0 else value


@lru_cache(maxsize=None)
def _generalized_prefactor_squared(two_j: int, lam: int) -> Fraction:
    # (2j+1)(2j−λ)!/(2j+λ+1)! × (dérivée λ-ième de Jacobi × préfacteur du caractère)²
    n = two_j
    scale = Fraction((n + 1) * math.factorial(n - lam), math.factorial(n + lam + 1))
    derivative = Fraction(1)
    for i in range(lam):
        derivative *= Fraction(n + i + 2, 2)
    constant = derivative * double_factorial_ratio(n)
    return scale * constant * constant


def _generalized_prefactor(two_j: int, lam: int) -> float:
    return math.sqrt(_generalized_prefactor_squared(two_j, lam))


def generalized_character(j, lam: int, eta):
    """χ_λ^j(η), caractère généralisé d'ordre λ.

    La dérivée λ-ième par rapport à cos(η/2) est prise analytiquement :
    chaque dérivation de P_n^{(α,β)} donne ½(n+α+β+1)·P_{n−1}^{(α+1,β+1)}.
    """
    spin = SpinQuantum.parse(j)
    if not 0 <= lam <= spin.two_j:
        raise ValueError(f"λ hors domaine [0, {spin.two_j}] : {lam}")
    half = np.asarray(eta, dtype=float) / 2
    value = (
        _generalized_prefactor(spin.two_j, lam)
        * np.sin(half) ** lam
        * jacobi_poly(spin.two_j - lam, lam + 0.5, lam + 0.5, np.cos(half))
    )
    return float(value) if np.ndim(value) == 0 else value


@lru_cache(maxsize=None)
def generalized_character_squared(two_j: int, lam: int) -> tuple[Fraction, ...]:
    """χ_λ^j(η)² = Σ_k b_k s^k c^{N−k}, s = sin²(η/2), c = cos²(η/2), b_k exacts.

    P_{N−λ}^{(λ+½,λ+½)} a la parité de N−λ : son carré est un polynôme en c.
    """
    n = two_j
    if not 0 <= lam <= n:
        raise ValueError(f"λ hors domaine [0, {n}] : {lam}")
    half_odd = Fraction(2 * lam + 1, 2)
    jac = jacobi_coefficients(n - lam, half_odd, half_odd)
    square = [Fraction(0)] * (2 * len(jac) - 1)
    for a, ca in enumerate(jac):
        for b, cb in enumerate(jac):
            square[a + b] += ca * cb
    prefactor = _generalized_prefactor_squared(n, lam)
    coeffs = [Fraction(0)] * (n + 1)
    # s^λ c^i (s + c)^{N−λ−i}
    for i, q in enumerate(square[::2]):
        if q == 0:
            continue
        for k in range(lam, n - i + 1):
            coeffs[k] += prefactor * q * math.comb(n - lam - i, k - lam)
    return tuple(coeffs)


# ── Wigner d et rotations ───────────────────────────────────────────────────

@lru_cache(maxsize=None)
def _wigner_terms(two_j: int) -> tuple[np.ndarray, ...]:
    """Termes de la somme factorielle de d^j_{m'm}(θ), indexés (ligne, colonne)."""
    n = two_j
    f = math.factorial
    rows, cols, coeffs, cos_pw, sin_pw = [], [], [], [], []
    for r in range(n + 1):                 # m' = j − r
        for c in range(n + 1):             # m  = j − c
            for k in range(max(0, r - c), min(n - c, r) + 1):
                num = f(n - c) * f(c) * f(n - r) * f(r)
                den = f(n - c - k) * f(k) * f(r - k) * f(k + c - r)
                sign = -1.0 if (k + c - r) % 2 else 1.0
                rows.append(r)
                cols.append(c)
                coeffs.append(sign * math.sqrt(Fraction(num, den * den)))
                cos_pw.append(n - 2 * k + r - c)
                sin_pw.append(2 * k + c - r)
    return (
        np.array(rows), np.array(cols), np.array(coeffs),
        np.array(cos_pw), np.array(sin_pw),
    )


def wigner_small_d(j, theta: float) -> np.ndarray:
    """Matrice réelle orthogonale d^j(θ) = e^{-iθJy}."""
    spin = SpinQuantum.parse(j)
    rows, cols, coeffs, cos_pw, sin_pw = _wigner_terms(spin.two_j)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    values = coeffs * np.power(c, cos_pw) * np.power(s, sin_pw)
    d = np.zeros((spin.dim, spin.dim))
    np.add.at(d, (rows, cols), values)
    return d


def axis_angles(axis) -> tuple[float, float]:
    """(θ, φ) de l'axe unitaire n ; ValueError si |n| ≠ 1."""
    n = np.asarray(axis, dtype=float).reshape(-1)
    if n.shape != (3,):
        raise ValueError(f"L'axe doit avoir 3 composantes : {axis!r}")
    norm = float(np.linalg.norm(n))
    if abs(norm - 1.0) > AXIS_TOLERANCE:
        raise ValueError(f"L'axe doit être unitaire : |n| = {norm!r}")
    theta = math.acos(max(-1.0, min(1.0, n[2])))
    phi = math.atan2(n[1], n[0])
    return theta, phi


def rotation_matrix(j, eta: float, axis) -> np.ndarray:
    """R_n(η) = D(φ,θ) · diag(e^{-iηm}) · D(φ,θ)†, avec D = e^{-iφJz} e^{-iθJy}."""
    spin = SpinQuantum.parse(j)
    theta, phi = axis_angles(axis)
    m = spin.m_values()
    frame = np.exp(-1j * phi * m)[:, None] * wigner_small_d(spin, theta)
    return (frame * np.exp(-1j * eta * m)) @ frame.conj().T


def spin_operators(j) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Jx, Jy, Jz) denses dans la base |j,m⟩, m décroissant."""
    spin = SpinQuantum.parse(j)
    jj = spin.two_j / 2
    m = spin.m_values()
    raising = np.zeros((spin.dim, spin.dim))
    for i in range(1, spin.dim):
        raising[i - 1, i] = math.sqrt(jj * (jj + 1) - m[i] * (m[i] + 1))
    jx = (raising + raising.T) / 2
    jy = (raising - raising.T) / 2j
    return jx.astype(complex), jy, np.diag(m).astype(complex)
