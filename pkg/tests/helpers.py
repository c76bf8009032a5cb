"""Shared test utilities: independent brute-force oracles and synthetic
corpus generators."""

from __future__ import annotations

import json
import random
from itertools import combinations
from pathlib import Path


def brute_force_at_k(n: int, correct: int, k: int) -> float:
    """Mean over all C(n, k) index subsets of 'subset contains a correct sample',
    with the first `correct` indexes marked correct."""
    subsets = list(combinations(range(n), k))
    hits = sum(1 for subset in subsets if any(i < correct for i in subset))
    return hits / len(subsets)


def brute_force_subset_max(scores, k: int) -> float:
    """Mean of max(scores over subset) across all C(n, k) index subsets."""
    subsets = list(combinations(range(len(scores)), k))
    return sum(max(scores[i] for i in subset) for subset in subsets) / len(subsets)


_SUFFIXES = ("", "", "", "rc1", "a1", "b2", "dev0", "post1")


def random_version_string(rng: random.Random) -> str:
    parts = [str(rng.randint(0, 30)) for _ in range(rng.randint(1, 4))]
    suffix = rng.choice(_SUFFIXES)
    return ".".join(parts) + (f".{suffix}" if suffix else "")


def write_jsonl(path: Path, rows) -> Path:
    path.write_text("".join(json.dumps(row, sort_keys=True) + "\n" for row in rows), encoding="utf-8")
    return path


# --- synthetic snippets for masking and CDC-dominance corpora ---------------

_CALLEES = ("explode", "to_numpy", "melt", "arange", "linspace", "softmax", "stack")
_MODULES = ("df", "np", "pd", "torch", "data")
_KWARGS = ("axis", "dtype", "indent", "dim", "inplace")


def make_reference_snippet(rng: random.Random) -> tuple[str, str]:
    """(code, core_token) for a small valid snippet that calls the core token."""
    token = rng.choice(_CALLEES)
    module = rng.choice(_MODULES)
    positional = ", ".join("arg%d" % i for i in range(rng.randint(0, 2)))
    keywords = ""
    if rng.random() < 0.5:
        keywords = ", ".join(f"{kw}={rng.randint(0, 9)}" for kw in rng.sample(_KWARGS, rng.randint(1, 2)))
    args = ", ".join(part for part in (positional, keywords) if part)
    call = f"{module}.{token}({args})"
    lines = [f"import {module}"] if rng.random() < 0.7 else []
    if rng.random() < 0.3:
        lines.append(f"with open(path_{rng.randint(0, 9)}) as handle:")
        lines.append(f"    result = {call}")
    else:
        lines.append(f"result = {call}")
    if rng.random() < 0.5:
        lines.append("print(result)")
    return "\n".join(lines) + "\n", token


def perturb_generation(rng: random.Random, reference: str, token: str) -> str:
    """A randomly degraded (or intact) generation for the reference snippet."""
    kind = rng.randrange(8)
    if kind == 0:
        return reference
    if kind == 1:  # rename the core token everywhere
        return reference.replace(token, "rewritten_call")
    if kind == 2:  # break the syntax
        return reference.replace("(", "((", 1)
    if kind == 3:  # drop one argument list entirely
        return reference.replace(f"{token}(", f"{token}(extra_one, extra_two, extra_three, ", 1)
    if kind == 4:  # strip keyword arguments
        head, _, _ = reference.partition("(")
        return head + "()\n"
    if kind == 5:  # remove a with statement if present
        return "\n".join(
            line.lstrip() for line in reference.splitlines() if not line.strip().startswith("with ")
        ) + "\n"
    if kind == 6:  # token only inside a string
        return f's = "{token}"\n'
    return "something_else = 1\n"


# --- deterministic mixed-granularity corpus for end-to-end runs -------------

_SOURCES = ("library_source", "downstream_application", "stack_overflow")
_TAGS = ("addition", "deprecation", "general", None)
_DATES = ("2015-03-01", "2018-06-15", "2021-12-01", None)


def build_fixture_corpus(count: int = 50, n: int = 6) -> tuple[list[dict], list[dict]]:
    """(instance_rows, sample_rows) with a known per-sample correctness pattern:
    instance i has i % (n + 1) exactly-correct samples, the rest degraded."""
    instances, samples = [], []
    for i in range(count):
        iid = f"inst-{i:03d}"
        base = {
            "id": iid,
            "library": "pandas",
            "source_version": "1.3.5",
            "description": "demo functionality",
            "data_source": _SOURCES[i % 3],
        }
        if _TAGS[i % 4] is not None:
            base["lifecycle_tag"] = _TAGS[i % 4]
        if _DATES[i % 4] is not None:
            base["release_date"] = _DATES[i % 4]

        kind = i % 4
        if kind == 0:
            row = dict(
                base,
                task="vscc",
                granularity="token",
                masked_code="arr = df.[token-mask]()",
                reference="to_numpy",
                core_token="to_numpy",
            )
            correct, wrong = "to_numpy", "as_matrix"
        elif kind == 1:
            row = dict(
                base,
                task="vscc",
                granularity="line",
                masked_code="import pandas as pd\n[line-mask]\nprint(result)\n",
                reference="result = df.explode('A')",
                core_token="explode",
            )
            correct, wrong = "result = df.explode('A')", "value = transform(x)"
        elif kind == 2:
            row = dict(
                base,
                task="vscc",
                granularity="block",
                masked_code="import pandas as pd\n[block-mask]\nprint(result)\n",
                reference="df = pd.DataFrame(data)\nresult = df.explode('A')",
                core_token="explode",
            )
            correct = "df = pd.DataFrame(data)\nresult = df.explode('A')"
            wrong = "result = unrelated(x)\n"
        else:
            forward = (i // 4) % 2 == 0
            row = dict(
                base,
                library="torch",
                task="vacm",
                granularity="block",
                source_version="1.3.2" if forward else "2.0.0",
                target_version="2.0.0" if forward else "1.3.2",
                source_code="ctx = torch.cuda.amp.autocast()",
                reference="ctx = torch.autocast('cuda')",
                core_token="autocast",
            )
            correct, wrong = "ctx = torch.autocast('cuda')", "ctx = enable_amp()"
        instances.append(row)
        correct_count = i % (n + 1)
        samples.append(
            {"instance_id": iid, "samples": [correct if j < correct_count else wrong for j in range(n)]}
        )
    return instances, samples
