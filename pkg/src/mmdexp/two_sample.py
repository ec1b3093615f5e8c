"""Two-sample decision: compare an MMD statistic with a threshold."""
from __future__ import annotations

from dataclasses import asdict, dataclass

from .mmd import _check_pair
from .thresholds import ThresholdSpec, _as_family, observed_statistic, threshold_for

ACCEPT = "accept_H0"
REJECT = "reject_H0"

# which threshold policies make sense for which statistic
_COMPATIBLE = {
    "biased": {"ldb", "permutation", "combined"},
    "unbiased": {"unbiased_ldb", "permutation", "combined"},
}


@dataclass(frozen=True)
class TestOutcome:
    __test__ = False  # not a pytest class

    decision: str
    statistic: float
    threshold: float
    statistic_kind: str
    threshold_policy: str
    n: int
    m: int

    @property
    def rejected(self) -> bool:
        return self.decision == REJECT

    def to_dict(self) -> dict:
        return asdict(self)


def decide(X, Y, kernel, spec: ThresholdSpec, statistic_kind: str = "biased") -> TestOutcome:
    """Run the kernel two-sample test.

    The biased statistic enters as d_k (square root) and the unbiased one as
    its raw squared value, each on the scale its threshold was derived for.
    ``kernel`` may be one KernelSpec or a finite family (sup statistic).
    """
    x, y = _check_pair(X, Y)
    if statistic_kind not in _COMPATIBLE:
        raise ValueError(f"unknown statistic kind {statistic_kind!r}")
    if spec.policy not in _COMPATIBLE[statistic_kind]:
        raise ValueError(f"threshold policy {spec.policy!r} cannot be paired with the "
                         f"{statistic_kind} statistic")
    if statistic_kind == "unbiased":
        if len(_as_family(kernel)) > 1:
            raise ValueError("kernel families are only supported with the biased statistic")
        if spec.policy in ("unbiased_ldb", "combined") and len(x) != len(y):
            raise ValueError("the unbiased distribution-free threshold requires n == m")
    stat = observed_statistic(x, y, kernel, statistic_kind)
    thr = threshold_for(spec, x, y, kernel, statistic_kind)
    return TestOutcome(
        decision=ACCEPT if stat <= thr else REJECT,
        statistic=float(stat),
        threshold=float(thr),
        statistic_kind=statistic_kind,
        threshold_policy=spec.policy,
        n=len(x),
        m=len(y),
    )
