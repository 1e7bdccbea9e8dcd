import pytest

from simt import ToyLexicon

# The worked interpreter example used throughout: a 5-token source whose
# 4th token repeats the 1st, translated by a scripted beam.
ZH = ["牛顿", "发现", "了", "牛顿", "运动定律"]
Y_FULL = ["Newton", "discovered", "newton's", "laws", "of", "motion"]

# Scripted endpoint table reproducing the extraction walk over ZH:
# boundaries 1 and 3 are accepted, 2 and 4 rejected, 5 is the full pair.
TABLE_SCRIPT = {
    "translate": [
        {"src": ZH, "forced": [], "candidates": [Y_FULL]},
        {"src": ZH[:1], "forced": [], "candidates": [["Newton"]]},
        {"src": ZH[:2], "forced": ["Newton"], "candidates": [["Newton", "found"]]},
        {"src": ZH[:3], "forced": ["Newton"], "candidates": [["Newton", "discovered"]]},
        {
            "src": ZH[:4],
            "forced": ["Newton", "discovered"],
            "candidates": [["Newton", "discovered", "Newton"]],
        },
        {"src": ZH, "forced": ["Newton", "discovered"], "candidates": [Y_FULL]},
    ]
}


@pytest.fixture
def lex_ab():
    """Monotone one-to-one dictionary, no reordering."""
    return ToyLexicon(entries={"a": ("A",), "b": ("B",)})


@pytest.fixture
def lex_toy():
    """Toy language with swap markers, fertility > 1, and a synonym slot."""
    return ToyLexicon(
        entries={
            "a": ("A",),
            "b": ("B",),
            "c": ("C1", "C2"),
            "d": ("D1", "D2", "D3"),
            "e": ("E",),
            "s": ("S",),
            "t": ("T",),
        },
        swap_markers=frozenset({"s", "t"}),
        synonym_slots={"b": "B2"},
    )
