"""Scoring: @k estimation, exact/identifier/prefix matching, the five-rule
critical-diff check, and correlation between metric series.

Every operation is pure; instance scoring parallelizes freely.
"""

from __future__ import annotations

import math
import re
import statistics
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum

from .core_model import Granularity
from .errors import DegenerateSeries, InvalidArgs, InvalidReference, KExceedsN
from .syntax import contains_core_token, extract_facts, identifier_tokens


def estimate_at_k(n: int, correct: int, k: int) -> float:
    """Probability that a uniformly random k-subset of n samples contains a
    correct one: 1 - C(n-correct, k) / C(n, k).

    Binomials are exact integers built multiplicatively (no factorials); the
    single final division is the only rounding step, so estimate_at_k(n, c, 1)
    is exactly c/n.
    """
    if k > n:
        raise KExceedsN(f"k={k} exceeds sample count n={n}")
    if n < 1 or k < 1 or not 0 <= correct <= n:
        raise InvalidArgs(
            f"need 1 <= k <= n and 0 <= correct <= n, got n={n} correct={correct} k={k}"
        )
    total = math.comb(n, k)
    all_incorrect = math.comb(n - correct, k)
    return (total - all_incorrect) / total


def score_at_k(per_sample: Sequence[float], k: int) -> float:
    """Expected maximum score over a uniformly random k-subset of the samples.

    With scores sorted ascending, the i-th smallest is the subset maximum with
    probability C(i-1, k-1) / C(n, k).  On {0,1} scores this reduces exactly
    to estimate_at_k with correct = number of ones.
    """
    n = len(per_sample)
    if k > n:
        raise KExceedsN(f"k={k} exceeds sample count n={n}")
    if n < 1 or k < 1:
        raise InvalidArgs(f"need 1 <= k <= n, got n={n} k={k}")
    if any(not 0.0 <= s <= 1.0 for s in per_sample):
        raise InvalidArgs("scores must lie in [0, 1]")
    ordered = sorted(per_sample)
    weighted = sum(s * math.comb(i, k - 1) for i, s in enumerate(ordered))
    return weighted / math.comb(n, k)


_LANG_TAG_RE = re.compile(r"[A-Za-z0-9_+-]*")


def strip_code_fences(text: str) -> str:
    """Body of the first fenced code block, or the text unchanged when no fence
    exists.  A language tag on the opening fence line is dropped."""
    start = text.find("```")
    if start == -1:
        return text
    rest = text[start + 3 :]
    end = rest.find("```")
    body = rest if end == -1 else rest[:end]
    newline = body.find("\n")
    if newline != -1 and _LANG_TAG_RE.fullmatch(body[:newline].strip()):
        body = body[newline + 1 :]
    return body


def em_token(generated: str, reference: str) -> int:
    """1 iff the texts agree exactly after trimming whitespace and code fences;
    comparison is case-sensitive."""
    return int(strip_code_fences(generated).strip() == strip_code_fences(reference).strip())


def em_block(generated: str, core_token: str) -> int:
    """1 iff the targeted API identifier occurs in the generated code."""
    return int(contains_core_token(generated, core_token))


def ism_line(generated_line: str, reference_line: str) -> float:
    """Longest common prefix of the two identifier sequences over the reference
    identifier count.  String literals contribute no identifiers; an empty
    reference sequence scores 1 only against an empty generated sequence."""
    gen = identifier_tokens(generated_line)
    ref = identifier_tokens(reference_line)
    if not ref:
        return 1.0 if not gen else 0.0
    prefix = 0
    for g, r in zip(gen, ref):
        if g != r:
            break
        prefix += 1
    return prefix / len(ref)


def pm_line(generated_line: str, reference_line: str) -> float:
    """Common character prefix over the reference length, both sides stripped
    of leading indentation; empty reference handled as in ism_line."""
    gen = generated_line.lstrip()
    ref = reference_line.lstrip()
    if not ref:
        return 1.0 if not gen else 0.0
    prefix = 0
    for g, r in zip(gen, ref):
        if g != r:
            break
        prefix += 1
    return prefix / len(ref)


def significant_lines(text: str) -> list[str]:
    """Non-blank, non-comment lines."""
    return [
        line for line in text.splitlines() if line.strip() and not line.strip().startswith("#")
    ]


def block_line_average(
    generated: str, reference: str, line_metric: Callable[[str, str], float]
) -> float:
    """Mean line_metric over reference significant lines paired positionally
    with generated significant lines.  Missing generated lines score 0,
    surplus generated lines are ignored; an empty reference scores 1 only
    against an empty generation."""
    ref_lines = significant_lines(reference)
    gen_lines = significant_lines(generated)
    if not ref_lines:
        return 1.0 if not gen_lines else 0.0
    scores = [
        line_metric(gen_lines[i], ref_lines[i]) if i < len(gen_lines) else 0.0
        for i in range(len(ref_lines))
    ]
    return sum(scores) / len(ref_lines)


class RuleResult(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    NOT_APPLICABLE = "not_applicable"


@dataclass(frozen=True)
class CdcVerdict:
    """Per-rule outcomes of the critical-diff check plus their conjunction.

    overall is true iff no rule failed; not_applicable counts as satisfied.
    """

    rule1_core_token: RuleResult
    rule2_valid: RuleResult
    rule3_arg_count: RuleResult
    rule4_with: RuleResult
    rule5_keywords: RuleResult
    overall: bool

    def __post_init__(self) -> None:
        rules = (
            self.rule1_core_token,
            self.rule2_valid,
            self.rule3_arg_count,
            self.rule4_with,
            self.rule5_keywords,
        )
        if self.overall != (RuleResult.FAIL not in rules):
            raise InvalidArgs("overall must be the conjunction of the non-failing rules")

    @property
    def score(self) -> float:
        return 1.0 if self.overall else 0.0


def cdc_check(
    generated: str, reference: str, core_token: str, *, scoped_with: bool = False
) -> CdcVerdict:
    """Apply the five critical-diff rules to generated code against a reference.

    Rule 1: the core token occurs in the generated code.
    Rule 2: the generated code parses.
    Rule 3: some generated core-token call matches a reference core-token
            call's argument count (judged only when the reference calls the
            core token).
    Rule 4: a with-statement appears in the generated code when one appears in
            the reference.  With scoped_with=True the rule instead compares
            with-enclosure of the core-token calls themselves.
    Rule 5: some generated core-token call uses at least the keyword argument
            names the reference core-token calls use (judged only when they
            use any).

    When the generated code does not parse, rules 3-5 fail wherever
    applicable since the structural check is impossible.
    """
    ref_facts = extract_facts(reference)
    if not ref_facts.is_valid:
        raise InvalidReference("reference code must be syntactically valid")

    ref_sites = [s for s in ref_facts.call_sites if s.callee_name == core_token]
    ref_counts = {s.total_arg_count for s in ref_sites}
    ref_keywords: frozenset[str] = (
        frozenset().union(*(s.keyword_names for s in ref_sites)) if ref_sites else frozenset()
    )

    applicable3 = bool(ref_sites)
    applicable5 = bool(ref_keywords)
    if scoped_with:
        applicable4 = any(s.inside_with for s in ref_sites)
    else:
        applicable4 = ref_facts.has_with

    rule1 = RuleResult.PASS if contains_core_token(generated, core_token) else RuleResult.FAIL
    gen_facts = extract_facts(generated)
    rule2 = RuleResult.PASS if gen_facts.is_valid else RuleResult.FAIL

    if not gen_facts.is_valid:
        rule3 = RuleResult.FAIL if applicable3 else RuleResult.NOT_APPLICABLE
        rule4 = RuleResult.FAIL if applicable4 else RuleResult.NOT_APPLICABLE
        rule5 = RuleResult.FAIL if applicable5 else RuleResult.NOT_APPLICABLE
    else:
        gen_sites = [s for s in gen_facts.call_sites if s.callee_name == core_token]
        if not applicable3:
            rule3 = RuleResult.NOT_APPLICABLE
        elif any(s.total_arg_count in ref_counts for s in gen_sites):
            rule3 = RuleResult.PASS
        else:
            rule3 = RuleResult.FAIL
        if not applicable4:
            rule4 = RuleResult.NOT_APPLICABLE
        elif scoped_with:
            rule4 = RuleResult.PASS if any(s.inside_with for s in gen_sites) else RuleResult.FAIL
        else:
            rule4 = RuleResult.PASS if gen_facts.has_with else RuleResult.FAIL
        if not applicable5:
            rule5 = RuleResult.NOT_APPLICABLE
        elif any(s.keyword_names >= ref_keywords for s in gen_sites):
            rule5 = RuleResult.PASS
        else:
            rule5 = RuleResult.FAIL

    results = (rule1, rule2, rule3, rule4, rule5)
    return CdcVerdict(*results, overall=not any(r is RuleResult.FAIL for r in results))


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient of two equal-length series."""
    if len(xs) != len(ys):
        raise InvalidArgs(f"series lengths differ: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise DegenerateSeries("correlation needs at least two points")
    try:
        return statistics.correlation(list(xs), list(ys))
    except statistics.StatisticsError as exc:
        raise DegenerateSeries(str(exc)) from None


@dataclass(frozen=True)
class MetricConfig:
    """Default sampling and aggregation settings: token runs draw many samples,
    line/block and migration runs draw few."""

    n_token: int = 100
    n_line: int = 6
    n_block: int = 6
    k_values: tuple[int, ...] = (1, 3, 10)
    tolerance: float = 1e-9

    def n_default(self, granularity: Granularity) -> int:
        if granularity is Granularity.TOKEN:
            return self.n_token
        if granularity is Granularity.LINE:
            return self.n_line
        return self.n_block

    def k_for(self, granularity: Granularity) -> tuple[int, ...]:
        """The configured k values applicable at this granularity (k <= n)."""
        limit = self.n_default(granularity)
        return tuple(k for k in self.k_values if k <= limit)
