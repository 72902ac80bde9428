"""Poisson tails, truncated Poisson, the peeling branching process and k-core constants.

Everything here is a pure function of its arguments and uses 64-bit floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

INF_TOL = 1e-17
BETA_ZERO = 1e-10
FIXED_POINT_TOL = 1e-12
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a numeric routine."""


def _check(j: int, lam: float) -> None:
    if j < 0:
        raise DomainError(f"negative index j={j}")
    if lam < 0 or math.isnan(lam):
        raise DomainError(f"negative rate lambda={lam}")


def _log_term(i: int, lam: float) -> float:
    return -lam + i * math.log(lam) - math.lgamma(i + 1)


def psi(j: int, lam: float) -> float:
    """P[Poisson(lam) = j]."""
    _check(j, lam)
    if lam == 0.0:
        return 1.0 if j == 0 else 0.0
    return math.exp(_log_term(j, lam))


def _upper_sum(j: int, lam: float) -> float:
    # terms decrease for i >= j > lam
    total = 0.0
    i = j
    while True:
        term = math.exp(_log_term(i, lam))
        total += term
        if term < INF_TOL * total or (term == 0.0 and i > lam):
            return total
        i += 1


def _lower_sum(j: int, lam: float) -> float:
    # sum_{i<j}, walking down from j-1; terms decrease since i < j <= lam + 1
    total = 0.0
    for i in range(j - 1, -1, -1):
        term = math.exp(_log_term(i, lam))
        total += term
        if term < INF_TOL * total:
            break
    return total


def _tails(j: int, lam: float) -> tuple[float, float]:
    """Return (P[X >= j], P[X < j]) computed from the smaller side."""
    _check(j, lam)
    if j == 0:
        return 1.0, 0.0
    if lam == 0.0:
        return 0.0, 1.0
    if j > lam:
        upper = min(_upper_sum(j, lam), 1.0)
        return upper, 1.0 - upper
    lower = min(_lower_sum(j, lam), 1.0)
    return 1.0 - lower, lower


def psi_ge(j: int, lam: float) -> float:
    """P[Poisson(lam) >= j]."""
    if j <= 0:
        _check(0, lam)
        return 1.0
    return _tails(j, lam)[0]


def psi_lt(j: int, lam: float) -> float:
    """P[Poisson(lam) < j]."""
    if j <= 0:
        _check(0, lam)
        return 0.0
    return _tails(j, lam)[1]


def falling(j: int, ell: int) -> int:
    """Falling factorial [j]_ell = j (j-1) ... (j-ell+1)."""
    out = 1
    for i in range(ell):
        out *= j - i
    return out


# -- truncated Poisson -------------------------------------------------------


def truncated_poisson_pmf(ell: int, lam: float, j: int) -> float:
    """P[Z_ell(lam) = j] for the Poisson(lam) law conditioned on being >= ell."""
    if ell < 1:
        raise DomainError(f"truncation point must be >= 1, got {ell}")
    if lam <= 0:
        raise DomainError(f"rate must be positive, got {lam}")
    if j < ell:
        return 0.0
    if lam >= ell:
        return psi(j, lam) / psi_ge(ell, lam)
    scale = _log_term(ell, lam)
    den = 0.0
    i = ell
    while True:
        term = math.exp(_log_term(i, lam) - scale)
        den += term
        if term < INF_TOL * den:
            break
        i += 1
    return math.exp(_log_term(j, lam) - scale) / den


def truncated_poisson_mean(ell: int, lam: float) -> float:
    """E[Z_ell(lam)] = lam * P[X >= ell-1] / P[X >= ell]."""
    if ell < 1:
        raise DomainError(f"truncation point must be >= 1, got {ell}")
    if lam <= 0:
        raise DomainError(f"rate must be positive, got {lam}")
    if lam >= ell:
        return lam * psi_ge(ell - 1, lam) / psi_ge(ell, lam)
    # both tails may underflow: sum terms scaled by the (ell-1)th one
    scale = _log_term(ell - 1, lam)
    den = 0.0
    i = ell
    while True:
        term = math.exp(_log_term(i, lam) - scale)
        den += term
        if term < INF_TOL * den:
            break
        i += 1
    return lam * (1.0 + den) / den


def truncated_poisson_solve_lambda(ell: int, target_mean: float) -> float:
    """Rate lam with E[Z_ell(lam)] = target_mean (bisection on the increasing mean)."""
    if ell < 1:
        raise DomainError(f"truncation point must be >= 1, got {ell}")
    if target_mean <= ell:
        raise DomainError(f"target mean {target_mean} must exceed truncation point {ell}")
    lo, hi = 0.0, max(1.0, target_mean)
    while truncated_poisson_mean(ell, hi) < target_mean:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= 0.0:
            break
        if truncated_poisson_mean(ell, mid) < target_mean:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


# -- branching process -------------------------------------------------------


@dataclass
class BranchingProfile:
    k: int
    c: float
    betas: list[float]
    beta_limit: float


def beta_step(k: int, c: float, x: float) -> float:
    return psi_ge(k - 1, c * x)


def beta_limit(k: int, c: float, max_iter: int = 10_000_000) -> float:
    """Largest fixed point of x = P[Poisson(c x) >= k-1], by iteration from x = 1."""
    x = 1.0
    for _ in range(max_iter):
        nxt = beta_step(k, c, x)
        if nxt < BETA_ZERO:
            return 0.0
        if abs(nxt - x) < FIXED_POINT_TOL:
            return nxt
        x = nxt
    return x


def beta_sequence(k: int, c: float, t_max: int) -> BranchingProfile:
    if k < 3:
        raise DomainError(f"k must be >= 3, got {k}")
    if c <= 0:
        raise DomainError(f"c must be positive, got {c}")
    betas = [1.0]
    for _ in range(t_max):
        betas.append(beta_step(k, c, betas[-1]))
    return BranchingProfile(k=k, c=c, betas=betas, beta_limit=beta_limit(k, c))


# -- thresholds --------------------------------------------------------------


def h_func(k: int, mu: float) -> float:
    """h(mu) = mu / P[Poisson(mu) >= k-1]."""
    return mu / psi_ge(k - 1, mu)


def f_func(k: int, mu: float) -> float:
    """F(mu) = P[Poisson(mu) >= k-1] / P[Poisson(mu) = k-1]."""
    return psi_ge(k - 1, mu) / psi(k - 1, mu)


def _golden_min(f, a: float, b: float, tol: float = 1e-12) -> float:
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
    return 0.5 * (a + b)


_MU_CK_CACHE: dict[int, float] = {}


def solve_mu_ck(k: int) -> float:
    """Minimiser of h; h decreases then increases so golden-section applies."""
    if k < 3:
        raise DomainError(f"k must be >= 3, got {k}")
    if k not in _MU_CK_CACHE:
        _MU_CK_CACHE[k] = _golden_min(lambda mu: h_func(k, mu), 1e-3, 3.0 * k + 10.0)
    return _MU_CK_CACHE[k]


def solve_ck(k: int) -> float:
    """Threshold average degree for a nonempty k-core: min over mu of h(mu)."""
    return h_func(k, solve_mu_ck(k))


def solve_mu_c(k: int, c: float) -> float:
    """Largest root of h(mu) = c, found by bisection on the increasing branch."""
    ck = solve_ck(k)
    if c <= ck:
        raise DomainError(f"subcritical: no k-core for k={k}, c={c} <= c_k={ck:.6f}")
    lo, hi = solve_mu_ck(k), c
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if h_func(k, mid) < c:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- constants ---------------------------------------------------------------


@dataclass
class CoreConstants:
    k: int
    c: float
    c_k: float
    mu_c: float
    mu_ck: float
    delta: float
    L: int
    C: float
    C_tree: int
    d0: int
    delta1: float
    eps1: float
    eps1_log10: float
    eps: float
    nhat_frac: float
    mhat_frac: float
    dhat: float
    overrides: dict = field(default_factory=dict)

    def as_lines(self) -> list[str]:
        out = []
        for name in self.__dataclass_fields__:
            if name == "overrides":
                continue
            value = getattr(self, name)
            if name == "C_tree" and value.bit_length() > 64:
                value = f"1+{self.k}^{self.L + 1}"
            out.append(f"{name}={value}")
        return out


def lemma_delta(k: int, c: float, ck: float | None = None) -> float:
    ck = solve_ck(k) if ck is None else ck
    return 0.5 * (1.0 - ck / c) * (k - 2) / (k - 1)


def tree_degree_probs(k: int, mu_c: float, upto: int) -> list[float]:
    """p_j = P[Z_{k-1}(mu_c) = j-1] for j = 0..upto (zero below k)."""
    return [
        truncated_poisson_pmf(k - 1, mu_c, j - 1) if j >= k else 0.0 for j in range(upto + 1)
    ]


def choose_d0(k: int, mu_c: float, delta: float, C: float) -> int:
    """Least d0 with C * sum_{j > d0} p_j <= delta^2 / (2 mu_c).

    The bound on the chance that the next explored vertex has degree above d0
    uses the upper multiplicative factor C on the tail mass.
    """
    target = delta * delta / (2.0 * mu_c)
    d0 = k
    while True:
        tail = psi_ge(d0, mu_c) / psi_ge(k - 1, mu_c)  # P[Z_{k-1} >= d0] = sum_{j>d0} p_j
        if C * tail <= target:
            return d0
        d0 += 1


def literal_d0_gap(delta: float, mu_c: float, C: float) -> float:
    """Infimum over d0 of 1 - sum_{i<=d0} p_i / C, minus the target delta^2/(2 mu_c).

    Positive means no d0 satisfies that form of the condition.
    """
    return (1.0 - 1.0 / C) - delta * delta / (2.0 * mu_c)


def choose_delta1(delta: float, max_i: int = 200) -> float:
    for i in range(1, max_i):
        d1 = math.exp(-1.0) * 2.0 ** (-i)
        if (1.0 - delta / 2.0) * d1 ** (-4.0 * d1) < 1.0 - delta / 4.0:
            return d1
    raise DomainError(f"no delta_1 on the grid for delta={delta}")


def core_constants(
    k: int,
    c: float,
    L: int | None = None,
    d0: int | None = None,
) -> CoreConstants:
    ck = solve_ck(k)
    if c <= ck:
        raise DomainError(f"subcritical: no k-core for k={k}, c={c} <= c_k={ck:.6f}")
    mu_ck = solve_mu_ck(k)
    mu_c = solve_mu_c(k, c)
    delta = lemma_delta(k, c, ck)
    L_formula = math.ceil(math.log(delta * delta / (2.0 * mu_c)) / math.log(1.0 - delta))
    C = (1.0 - delta) ** 2 / (1.0 - 2.0 * delta)
    d0_formula = choose_d0(k, mu_c, delta, C)
    overrides = {}
    if L is not None:
        overrides["L"] = L
    if d0 is not None:
        overrides["d0"] = d0
    L_used = L_formula if L is None else L
    delta1 = choose_delta1(delta)
    log_a = (-1.0 - 1.0 / delta1) * math.log(math.e**2 * c)
    candidates = [log_a, math.log(delta / (2.0 - delta)), -math.log(1.0 + 2.0 * math.e**4 * k**6)]
    log_eps1 = min(candidates)
    eps1 = math.exp(log_eps1)
    nhat = psi_ge(k, mu_c)
    mhat = mu_c * psi_ge(k - 1, mu_c) / 2.0
    return CoreConstants(
        k=k,
        c=c,
        c_k=ck,
        mu_c=mu_c,
        mu_ck=mu_ck,
        delta=delta,
        L=L_used,
        C=C,
        C_tree=1 + k ** (L_used + 1),
        d0=d0_formula if d0 is None else d0,
        delta1=delta1,
        eps1=eps1,
        eps1_log10=log_eps1 / math.log(10.0),
        eps=eps1 * nhat / 2.0,
        nhat_frac=nhat,
        mhat_frac=mhat,
        dhat=2.0 * mhat / nhat,
        overrides=overrides,
    )


# -- peeling predictions ------------------------------------------------------


@dataclass
class HistogramPrediction:
    k: int
    c: float
    t: int
    entries: dict[int, float]
    d0_extra: float

    def fractions(self) -> dict[int, float]:
        """Entries with the degree-0 correction folded into bin 0."""
        out = dict(self.entries)
        out[0] = out.get(0, 0.0) + self.d0_extra
        return out


def predicted_histogram(k: int, c: float, t: int, tail_tol: float = 1e-16) -> HistogramPrediction:
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    if t == 0:
        entries = {}
        j = 0
        while True:
            entries[j] = psi(j, c)
            if j > c and psi_ge(j + 1, c) < tail_tol:
                break
            j += 1
        return HistogramPrediction(k=k, c=c, t=0, entries=entries, d0_extra=0.0)
    betas = beta_sequence(k, c, t).betas
    lam = c * betas[t]
    gap = c * betas[t - 1] - lam
    entries = {}
    j = 0
    while True:
        entries[j] = psi(j, lam) * psi_ge(k - j, gap)
        if j > lam and psi_ge(j + 1, lam) < tail_tol:
            break
        j += 1
    return HistogramPrediction(
        k=k, c=c, t=t, entries=entries, d0_extra=psi_lt(k, c * betas[t - 1])
    )


def molloy_reed_q(histogram: dict[int, float]) -> float:
    return sum(j * (j - 2) * frac for j, frac in histogram.items())


def find_t_dagger(k: int, c: float, t_limit: int = 100_000) -> int:
    """Least t >= 1 with c * P[Poisson(c beta_{t-1}) >= k-2] < 1, which makes Q_t negative."""
    if c >= solve_ck(k):
        raise DomainError(f"c={c} is not below c_k; beta_t does not vanish")
    beta_prev = 1.0
    for t in range(1, t_limit):
        if c * psi_ge(k - 2, c * beta_prev) < 1.0:
            return t
        beta_prev = beta_step(k, c, beta_prev)
    raise DomainError(f"no t_dagger found within {t_limit} steps")


def poisson_convolution_check(
    lam: float, mu: float, k: int, ell: int, tail_tol: float = 1e-18
) -> tuple[float, float]:
    """Both sides of sum_j [j]_ell P_j(lam) P[>= k-j](mu-lam) = lam^ell P[>= k-ell](mu)."""
    if lam > mu:
        raise DomainError(f"need lam <= mu, got {lam} > {mu}")
    if not 0 <= ell <= k:
        raise DomainError(f"need 0 <= ell <= k, got ell={ell}, k={k}")
    lhs = 0.0
    j = ell
    while True:
        lhs += falling(j, ell) * psi(j, lam) * psi_ge(k - j, mu - lam)
        if j > lam + ell and (lam == 0.0 or lam**ell * psi_ge(j - ell + 1, lam) < tail_tol):
            break
        j += 1
    rhs = lam**ell * psi_ge(k - ell, mu)
    return lhs, rhs
