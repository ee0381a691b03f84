"""Free-text prompt normalization to canonical (feature, level) labels.

Canonical prompts ("high number of parks, ...") pass through unchanged;
common synonyms ("many parks", "little carbon") normalize to canonical
labels.  Unrecognized phrases are rejected with suggestions, never guessed.
"""

from __future__ import annotations

from .dataset import FEATURE_PHRASES, LEVELS, DatasetError
from .features import FEATURE_NAMES

LEVEL_SYNONYMS = {
    "low": "low",
    "few": "low",
    "little": "low",
    "small": "low",
    "minimal": "low",
    "mid": "mid",
    "medium": "mid",
    "some": "mid",
    "moderate": "mid",
    "average": "mid",
    "high": "high",
    "many": "high",
    "much": "high",
    "large": "high",
    "big": "high",
    "maximal": "high",
    "lots": "high",
}

FEATURE_SYNONYMS = {
    "number of parks": "num_parks",
    "parks": "num_parks",
    "park count": "num_parks",
    "largest park": "largest_park",
    "park size": "largest_park",
    "biggest park": "largest_park",
    "largest park size": "largest_park",
    "total units": "total_units",
    "units": "total_units",
    "unit count": "total_units",
    "number of units": "total_units",
    "sequestered carbon": "carbon",
    "carbon": "carbon",
    "carbon sequestration": "carbon",
    "privacy": "privacy",
}


class PromptError(ValueError):
    pass


def normalize_phrase(phrase: str) -> tuple[str, str]:
    """One phrase like 'many parks' -> ('num_parks', 'high')."""
    words = phrase.strip().lower().replace("  ", " ").split()
    if len(words) < 2:
        raise PromptError(f"cannot parse {phrase!r}; expected '<level> <feature>'")
    # 'lots of parks' style: drop a connective 'of' after the level word.
    level_word = words[0]
    rest = words[1:]
    if rest and rest[0] == "of":
        rest = rest[1:]
    level = LEVEL_SYNONYMS.get(level_word)
    if level is None:
        raise PromptError(
            f"unknown level {level_word!r} in {phrase!r}; try one of low/mid/high "
            f"or synonyms like few/some/many"
        )
    feature = FEATURE_SYNONYMS.get(" ".join(rest))
    if feature is None:
        options = ", ".join(sorted(set(FEATURE_PHRASES.values())))
        raise PromptError(
            f"unknown feature {' '.join(rest)!r} in {phrase!r}; known features: {options}"
        )
    return feature, level


def parse_free_text(text: str) -> dict[str, str]:
    """Comma-separated phrases -> partial {feature: level} label dict."""
    labels: dict[str, str] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        feature, level = normalize_phrase(part)
        if feature in labels and labels[feature] != level:
            raise PromptError(f"conflicting levels for {feature}")
        labels[feature] = level
    return labels


def labels_dict_to_tuple(labels: dict[str, str]) -> tuple[str, ...]:
    missing = [n for n in FEATURE_NAMES if n not in labels]
    if missing:
        raise PromptError(f"labels missing features: {missing}")
    bad = [lv for lv in labels.values() if lv not in LEVELS]
    if bad:
        raise PromptError(f"bad levels: {bad}")
    return tuple(labels[n] for n in FEATURE_NAMES)
