"""Catalogue centralisé des valeurs publiées : angles critiques, régimes optimaux, η₀."""

import math
from fractions import Fraction

# Chaque angle critique est un zéro de Σ_t c_t φ_t(η), c = A(gauche) − A(droite).
# zero_index : rang du zéro strictement positif (1 = premier).
# identified=False : frontière observée numériquement sans équation associée.

CRITICAL_ANGLES: dict[str, dict] = {
    # ── j = 2 ───────────────────────────────────────────────────────────────────
    "2/eta1": {
        "j":          "2",
        "value":      "1.68374",
        "left":       "tetrahedron",
        "right":      "cat",
        "coeffs":     ("0", "1/4"),
        "zero_index": 1,
        "exact":      lambda: 2 * math.atan(math.sqrt(9 - 2 * math.sqrt(15))),
    },
    "2/eta2": {
        "j":          "2",
        "value":      "2.44264",
        "left":       "cat",
        "right":      "coherent",
        "coeffs":     ("1", "3/4"),
        "zero_index": 1,
        "exact":      lambda: _eta2_spin2(),
    },
    # ── j = 5/2 ─────────────────────────────────────────────────────────────────
    "5/2/eta1": {
        "j":          "5/2",
        "value":      "1.49697",
        "left":       "bipyramid",
        "right":      "cat",
        "coeffs":     ("0", "6/25"),
        "zero_index": 1,
    },
    "5/2/eta2": {
        "j":          "5/2",
        "value":      "2.2521",
        "left":       "cat",
        "right":      "coherent",
        "coeffs":     ("1", "3/4"),
        "zero_index": 1,
    },
    # ── j = 3 ───────────────────────────────────────────────────────────────────
    "3/eta1": {
        "j":          "3",
        "value":      "1.3635",
        "left":       "octahedron",
        "right":      "cat",
        "coeffs":     ("0", "1/4", "1/3"),
        "zero_index": 1,
    },
    "3/eta2": {
        "j":          "3",
        "value":      "2.04367",
        "left":       "cat",
        "right":      "coherent",
        "coeffs":     ("1", "3/4", "2/3"),
        "zero_index": 1,
    },
    "3/eta3": {
        "j":          "3",
        "value":      "2.35881",
        "left":       "coherent",
        "right":      "octahedron",
        "coeffs":     ("1", "1", "1"),
        "zero_index": 2,
    },
    "3/eta4": {
        "j":          "3",
        "value":      "2.65576",
        "left":       "octahedron",
        "right":      "coherent",
        "coeffs":     ("1", "1", "1"),
        "zero_index": 3,
    },
    # ── j = 7/2 ─────────────────────────────────────────────────────────────────
    "7/2/eta1": {
        "j":          "7/2",
        "value":      "0.71718",
        "left":       "small-angle",
        "right":      "inner-cat",
        "coeffs":     None,
        "zero_index": None,
        "identified": False,
    },
    "7/2/eta2": {
        "j":          "7/2",
        "value":      "1.24169",
        "left":       "inner-cat",
        "right":      "cat",
        "coeffs":     ("0", "12/49", "16/49"),
        "zero_index": 1,
    },
    "7/2/eta3": {
        "j":          "7/2",
        "value":      "1.60141",
        "left":       "cat",
        "right":      None,         # profil variable, voir le balayage
        "coeffs":     ("1", "0", "0"),
        "zero_index": 3,
    },
    "7/2/eta4": {
        "j":          "7/2",
        "value":      "1.88334",
        "left":       None,
        "right":      "cat",
        "coeffs":     ("1", "0", "0"),
        "zero_index": 4,
    },
    "7/2/eta5": {
        "j":          "7/2",
        "value":      "2.41684",
        "left":       "cat",
        "right":      "coherent",
        "coeffs":     ("1", "3/4", "2/3"),
        "zero_index": 1,
    },
}

# Régimes optimaux (minimisation) pour 1 ≤ j ≤ 7/2 : (état, borne basse, borne haute).
# Bornes : "0", "pi" ou une clé de CRITICAL_ANGLES.
OPTIMAL_REGIMES: dict[str, list[tuple[str, str, str]]] = {
    "1":   [("any", "0", "pi")],
    "3/2": [("any", "0", "pi")],
    "2":   [("tetrahedron", "0", "2/eta1"),
            ("cat", "2/eta1", "2/eta2"),
            ("coherent", "2/eta2", "pi")],
    "5/2": [("bipyramid", "0", "5/2/eta1"),
            ("cat", "5/2/eta1", "5/2/eta2"),
            ("coherent", "5/2/eta2", "pi")],
    "3":   [("octahedron", "0", "3/eta1"),
            ("cat", "3/eta1", "3/eta2"),
            ("coherent", "3/eta2", "3/eta3"),
            ("octahedron", "3/eta3", "3/eta4"),
            ("coherent", "3/eta4", "pi")],
    "7/2": [("small-angle", "0", "7/2/eta1"),
            ("inner-cat", "7/2/eta1", "7/2/eta2"),
            ("cat", "7/2/eta2", "7/2/eta3"),
            ("cat", "7/2/eta4", "7/2/eta5"),
            ("coherent", "7/2/eta5", "pi")],
}

# η₀ (premier zéro de φ_1) et valeur universelle F(η₀) = φ_0(η₀), formes closes.
ETA0_CLOSED_FORMS: dict[str, dict] = {
    "1": {
        "eta0":      lambda: math.acos(-2 / 3),
        "universal": lambda: 7 / 27,
    },
    "3/2": {
        "eta0":      lambda: math.acos((-9 + math.sqrt(21)) / 12),
        "universal": lambda: (33 + 2 * math.sqrt(21)) / 180,
    },
}


def _eta2_spin2() -> float:
    b = (223 - 35 * math.sqrt(7)) ** (1 / 3)
    a = 19 * 6 ** (2 / 3) + 6 ** (1 / 3) * (223 - 35 * math.sqrt(7)) ** (2 / 3)
    return 2 * math.atan(math.sqrt(-(a + 102 * b) / (a - 38 * b)))


def quoted_tolerance(value: str) -> float:
    """Demi-unité de la dernière décimale citée (« 2.2521 » → 5e-5)."""
    decimals = len(value.split(".")[1]) if "." in value else 0
    return 0.5 * 10 ** (-decimals)


def critical_coeffs(key: str) -> tuple[Fraction, ...] | None:
    coeffs = CRITICAL_ANGLES[key]["coeffs"]
    return None if coeffs is None else tuple(Fraction(c) for c in coeffs)


def angles_for(j: str) -> list[str]:
    """Clés des angles publiés pour j (ordre croissant)."""
    return [k for k, v in CRITICAL_ANGLES.items() if v["j"] == j]


def format_angle(key: str) -> str:
    """« η₂ ≈ 2.44264 (cat | coherent) », ou la clé brute si inconnue."""
    entry = CRITICAL_ANGLES.get(key)
    if entry is None:
        return key
    index = key.rsplit("eta", 1)[1]
    sides = " | ".join(s or "—" for s in (entry["left"], entry["right"]))
    return f"η{index} ≈ {entry['value']} ({sides})"


def regime_bound(bound: str) -> float:
    """Borne d'un régime de OPTIMAL_REGIMES en radians."""
    if bound == "0":
        return 0.0
    if bound == "pi":
        return math.pi
    return float(CRITICAL_ANGLES[bound]["value"])
