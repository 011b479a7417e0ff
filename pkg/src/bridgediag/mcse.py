"""Delta-method Monte Carlo standard error for the bridge estimate.

The estimate is a ratio of the numerator-term mean to the denominator-term
mean; the two sets of draws are independent, so the covariance term vanishes
and the relative variance of the ratio is the sum of the two relative
variances of the means. The numerator terms come from iid proposal draws
(effective size S2 exactly); the denominator terms inherit the posterior
chains' autocorrelation, so their mean's variance uses the multi-chain ESS.
The log-scale error follows from the log-normal variance relation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bridge import BridgeResult
from .errors import BridgeDiagError
from .ess import ess_mean
from .numerics import log_mean_exp


@dataclass(frozen=True)
class McseReport:
    """Relative variances of the two term means and the resulting errors.

    ``mcse_rel_linear`` is MCSE(p_hat)/p_hat; ``mcse_log`` is MCSE(log p_hat)
    and always equals sqrt(log(1 + mcse_rel_linear^2)) exactly.
    """

    rel_var_num: float
    rel_var_den: float
    ess_den: float
    mcse_log: float
    mcse_rel_linear: float


def relative_term_variance(log_terms, n_eff: float) -> float:
    """Var(terms) / (n_eff * mean(terms)^2), computed shift-protected in log space.

    Returns (m2/m1^2 - 1) * S/(S-1) / n_eff with m1, m2 the first two raw
    moments of exp(log_terms); -inf entries are exact zero terms and enter the
    moments as such. Exactly zero for a constant sequence.
    """
    lt = np.asarray(log_terms, dtype=float)
    if lt.ndim != 1:
        raise BridgeDiagError(f"log terms must be 1-d, got shape {lt.shape}")
    if np.isnan(lt).any() or np.isposinf(lt).any():
        raise BridgeDiagError("log terms contain nan or +inf")
    finite = np.isfinite(lt)
    if finite.sum() < 2:
        raise BridgeDiagError("need at least 2 finite terms")
    if n_eff < 1.0:
        raise BridgeDiagError(f"n_eff must be >= 1, got {n_eff}")
    if finite.all() and np.min(lt) == np.max(lt):
        return 0.0
    s = lt.size
    ratio = np.exp(log_mean_exp(2.0 * lt) - 2.0 * log_mean_exp(lt))
    return max(ratio - 1.0, 0.0) * (s / (s - 1)) / n_eff


def denominator_ess(result: BridgeResult) -> float:
    """ESS of the linear-scale denominator terms over their chain layout.

    Constant terms (the proportional-proposal limit) have an exactly zero
    variance contribution, for which the iid count is reported.
    """
    c, t = result.chain_layout
    log_f1 = result.log_f1
    values = np.exp(log_f1 - np.max(log_f1)).reshape(c, t)
    if np.all(values == values.flat[0]):
        return float(result.s1_count)
    return ess_mean(values)


def mcse_of_bridge(result: BridgeResult) -> McseReport:
    """McseReport for a converged bridge result.

    The numerator side uses n_eff = S2 (iid proposal draws); the denominator
    side uses the chain-layout ESS of its terms.
    """
    for name, arr in (("log_f2", result.log_f2), ("log_f1", result.log_f1)):
        if np.isfinite(arr).sum() < 2:
            raise BridgeDiagError(f"need at least 2 finite {name} terms")
    rel_var_num = relative_term_variance(result.log_f2, float(result.s2_count))
    ess_den = denominator_ess(result)
    rel_var_den = relative_term_variance(result.log_f1, ess_den)
    total = rel_var_num + rel_var_den
    return McseReport(
        rel_var_num=rel_var_num,
        rel_var_den=rel_var_den,
        ess_den=ess_den,
        mcse_log=float(np.sqrt(np.log1p(total))),
        mcse_rel_linear=float(np.sqrt(total)),
    )
