"""Closed-form constants relating the greedy-type properties.

Every formula is evaluated in exact rational arithmetic on the binary64
inputs and rounded once at the end, so equal inputs give bitwise-equal
outputs.

Input names: ``C``, ``C1``, ``C2``, ``C3``, ``K`` (property constants),
``M`` (separation constant), ``s``, ``t`` (weakness parameters),
``lam``, ``lam_p``, ``lam_pp`` (basis constants), ``kappa`` (1 for real
scalars, 2 for complex), ``inf_w_inv`` (``inf_j 1/w_j``), ``w_A``,
``sup_w``, ``r`` (norming constant), ``m``, ``p_m`` and Chebyshevian
parameters ``L``, ``L_m``, ``L_2m``, ``L_m1`` (at ``m-1``), ``L_2``
and the table ``L_2``, ``L_4``, ... used by ``cor612_pm``.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction

from spaces.exceptions import ContractError, DomainError

logger = logging.getLogger(__name__)

WEAKNESS = ("s", "t")
INTEGER_INPUTS = ("m",)


@dataclass(frozen=True)
class Formula:
    inputs: tuple
    evaluate: object
    description: str = ""


def _max(*values):
    return max(values)


def _min(*values):
    return min(values)


def _thm314_i(C, M, s, t, lam, lam_p):
    return C * M * _max(1 + 8 / (t * s) * lam * lam_p, 1 + 6 * C / (t * s**3))


def _thm314_ii(C, M, s, lam, lam_p):
    return 2 / s * C * M * _max(lam * lam_p, 2 * C / s**2)


def _thm53_K(C, s, lam, lam_p):
    return C / s * _max(2 * C / s, lam * lam_p)


def _thm53_qg(C, K, s, t):
    return (1 + K / (t * s**2)) * (1 + C)


def _prop39_C1(C, s, lam, lam_p, inf_w_inv):
    return 3 * C / s * (1 + lam * lam_p) * lam * _max(2 * inf_w_inv, 1)


def _prop62(M, L, s, t):
    return M * L * (1 + 2 * L / (t * s**2))


def _prop66_i(M, L_m, L_2m, s, t):
    return M * L_2m * (1 + 2 * (M + 1) * L_m / (t * s**2))


def _prop66_ii(M, L_m, L_2m, s, t, m):
    _parity(m, even=True)
    return M * L_2m * (1 + 4 * L_m / (t * s**2))


def _prop66_iii(M, L_m1, L_2, L_2m, s, t, m):
    _parity(m, even=False)
    if m == 1:
        raise DomainError("prop66_iii needs an odd m > 1")
    return M * L_2m * (1 + (4 * L_m1 + 2 * L_2) / (t * s**2))


def _prop611_i(M, L_m, s):
    return L_m**2 * M * (1 + M) / s**2


def _prop611_ii(M, L_m, s, m):
    _parity(m, even=True)
    return 2 * L_m**2 * M / s**2


def _prop611_iii(M, L_m1, s, lam, lam_p, m):
    _parity(m, even=False)
    return 2 * L_m1**2 * M / s**2 + lam * lam_p


def _cor612_i(M, p_m, L_m, s):
    return M * p_m + _prop611_i(M, L_m, s)


def _cor612_ii(M, p_m, L_m, s, m):
    return M * p_m + _prop611_ii(M, L_m, s, m)


def _cor612_iii(M, p_m, L_m1, s, lam, lam_p, m):
    return M * p_m + _prop611_iii(M, L_m1, s, lam, lam_p, m)


def _remark37(C, kappa):
    return 2 * kappa * C**2


def _thm321(C1, C2, C3, s, t):
    return C1 * (1 + C2 * C3 / (t * s))


def _thm315_i(C, M, s, t):
    return C * M * (1 + 6 * C / (t * s**3))


def _thm315_ii(C, M, s):
    return 4 * C**2 * M / s**3


def _prop39_K1(K, lam, inf_w_inv):
    return 4 * K * lam * _max(2 * inf_w_inv, 1)


def _prop39_fundamental(C1, w_A):
    return C1 * _max(w_A, 1)


def _prop39_km(C1, lam_p, sup_w):
    return C1 * lam_p * _max(sup_w, 1)


def _thm53_disjoint_superdem(C, s):
    return C / s


def _prop62_sqg(M, C, s):
    return M * C * (1 + 2 * C / s**2)


def _prop66_K(M, C, s, lam, lam_p, lam_pp):
    return _min(
        M * C * (1 + 2 * C * (M + 1) / s**2),
        _max(M * C * (1 + 6 * C / s**2), 1 + lam * lam_p + lam_pp),
    )


def _cor612_K(M, C, s, lam, lam_p):
    return M * C * (1 + 2 * C / s**2) + _min(C**2 * M * (1 + M) / s**2, 2 * C**2 * M / s**2 + lam * lam_p)


def _lemma77_dem(lam, lam_p, C, C1, C2):
    return lam * lam_p + 2 * _max(C, C1, C2)


def _thm315_norming(r):
    return 1 / r


def _parity(m, even):
    if (m % 2 == 0) != even:
        raise DomainError(f"m={m} must be {'even' if even else 'odd'} for this bound")


FORMULAS = {
    "thm314_i": Formula(("C", "M", "s", "t", "lam", "lam_p"), _thm314_i, "w-almost greedy constant, first form"),
    "thm314_ii": Formula(("C", "M", "s", "lam", "lam_p"), _thm314_ii, "w-almost greedy constant, second form"),
    "thm315_i": Formula(("C", "M", "s", "t"), _thm315_i, "t-greedy sets, c0 weight"),
    "thm315_ii": Formula(("C", "M", "s"), _thm315_ii, "t-greedy sets, norming dual basis"),
    "thm53_K": Formula(("C", "s", "lam", "lam_p"), _thm53_K, "almost semi-greedy to superdemocratic"),
    "thm53_qg": Formula(("C", "K", "s", "t"), _thm53_qg, "almost semi-greedy to quasi-greedy"),
    "prop39_C1": Formula(("C", "s", "lam", "lam_p", "inf_w_inv"), _prop39_C1, "fundamental function bound"),
    "prop62": Formula(("M", "L", "s", "t"), _prop62, "suppression quasi-greedy from L_ch^l"),
    "prop66_i": Formula(("M", "L_m", "L_2m", "s", "t"), _prop66_i, "disjoint Lebesgue, any m"),
    "prop66_ii": Formula(("M", "L_m", "L_2m", "s", "t", "m"), _prop66_ii, "disjoint Lebesgue, even m"),
    "prop66_iii": Formula(("M", "L_m1", "L_2", "L_2m", "s", "t", "m"), _prop66_iii, "disjoint Lebesgue, odd m"),
    "prop611_i": Formula(("M", "L_m", "s"), _prop611_i, "squeeze symmetry, any m"),
    "prop611_ii": Formula(("M", "L_m", "s", "m"), _prop611_ii, "squeeze symmetry, even m"),
    "prop611_iii": Formula(("M", "L_m1", "s", "lam", "lam_p", "m"), _prop611_iii, "squeeze symmetry, odd m"),
    "cor612_i": Formula(("M", "p_m", "L_m", "s"), _cor612_i, "almost greedy parameter, any m"),
    "cor612_ii": Formula(("M", "p_m", "L_m", "s", "m"), _cor612_ii, "almost greedy parameter, even m"),
    "cor612_iii": Formula(("M", "p_m", "L_m1", "s", "lam", "lam_p", "m"), _cor612_iii, "almost greedy parameter, odd m"),
    "remark37": Formula(("C", "kappa"), _remark37, "Property (C) from truncation quasi-greediness"),
    "thm321": Formula(("C1", "C2", "C3", "s", "t"), _thm321, "t-greedy sets from s-semi-greedy"),
    "prop39_K1": Formula(("K", "lam", "inf_w_inv"), _prop39_K1, "disjoint superdemocratic replacement for C1"),
    "prop39_fundamental": Formula(("C1", "w_A"), _prop39_fundamental, "upper bound of ||1_{eps,A}||"),
    "prop39_km": Formula(("C1", "lam_p", "sup_w"), _prop39_km, "bound of k_m"),
    "thm53_disjoint_superdem": Formula(("C", "s"), _thm53_disjoint_superdem, "almost greedy to disjoint superdemocratic"),
    "prop62_sqg": Formula(("M", "C", "s"), _prop62_sqg, "weak semi-greedy to suppression quasi-greedy"),
    "prop66_K": Formula(("M", "C", "s", "lam", "lam_p", "lam_pp"), _prop66_K, "weak semi-greedy to almost greedy"),
    "cor612_K": Formula(("M", "C", "s", "lam", "lam_p"), _cor612_K, "weak semi-greedy to almost greedy, squeeze route"),
    "lemma77_dem": Formula(("lam", "lam_p", "C", "C1", "C2"), _lemma77_dem, "democracy of an interleaved sum"),
    "lemma75_tqg": Formula(("C", "kappa"), _remark37, "truncation quasi-greedy constant of a Schauder majorant"),
    "thm315_norming": Formula(("r",), _thm315_norming, "M for an r-norming dual basis"),
}


def _chebyshevian(name):
    # L_ch(0, s) is 0, so the Chebyshevian parameters may vanish
    return name == "L" or name.startswith("L_")


def _exact(name, value):
    if isinstance(value, bool):
        raise DomainError(f"input {name} must be a real number")
    if name in INTEGER_INPUTS:
        if int(value) != value or value < 1:
            raise DomainError(f"input {name} must be a positive integer, got {value}")
        return int(value)
    try:
        exact = Fraction(value)
    except (TypeError, ValueError, OverflowError):
        raise DomainError(f"input {name} must be a finite real, got {value!r}")
    if exact < 0 or (exact == 0 and not _chebyshevian(name)):
        raise DomainError(f"input {name} must be positive, got {value}")
    if name in WEAKNESS and exact > 1:
        raise DomainError(f"{name} must lie in (0, 1], got {value}")
    return exact


def p_m(m, s, table):
    """``max_{j<=m} L(2 floor((j+1)/2)) (1 + 2 L(...) s^-2)`` from ``table[k] = L_ch^l(k, s)``."""
    s = _exact("s", s)
    best = None
    for j in range(1, int(m) + 1):
        k = 2 * ((j + 1) // 2)
        if k not in table:
            raise ContractError(f"cor612_pm needs L_{k}")
        L = _exact(f"L_{k}", table[k])
        value = L * (1 + 2 * L / s**2)
        best = value if best is None else max(best, value)
    return best


def bound_calculator(formula, inputs):
    """Evaluate a closed-form bound; unknown tags and missing inputs are contract errors."""
    inputs = dict(inputs)
    if formula == "cor612_pm":
        for name in ("m", "s"):
            if name not in inputs:
                raise ContractError(f"cor612_pm needs input {name}")
        m = _exact("m", inputs["m"])
        table = {int(key[2:]): value for key, value in inputs.items() if key.startswith("L_") and key[2:].isdigit()}
        return float(p_m(m, inputs["s"], table))
    try:
        entry = FORMULAS[formula]
    except KeyError:
        raise ContractError(f"unknown bound formula '{formula}'")
    missing = [name for name in entry.inputs if name not in inputs]
    if missing:
        raise ContractError(f"{formula} needs inputs {', '.join(missing)}")
    arguments = {name: _exact(name, inputs[name]) for name in entry.inputs}
    value = float(entry.evaluate(**arguments))
    logger.debug(f"{formula}({arguments}) = {value!r}")
    return value


def formula_tags():
    return sorted(FORMULAS) + ["cor612_pm"]
