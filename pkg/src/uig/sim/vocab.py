"""Closed vocabulary of the simulator world."""

NOUNS = (
    "airplane", "apple", "ball", "balloon", "banana", "book", "car", "cat",
    "cup", "cushion", "desk", "dog", "giraffe", "girl", "key", "laptop",
    "pear", "stool", "tree", "woman",
)

COLORS = (
    "black", "blue", "brown", "gray", "green", "orange", "pink", "purple",
    "red", "white", "yellow",
)

STYLES = (
    "fluffy", "glass", "golden", "metallic", "plastic", "shiny", "striped",
    "wooden",
)

RELATIONS = ("behind", "in_front_of", "on", "under", "left_of", "right_of")

OPPOSITE = {
    "behind": "in_front_of",
    "in_front_of": "behind",
    "on": "under",
    "under": "on",
    "left_of": "right_of",
    "right_of": "left_of",
}

# Largest count the DSL accepts; keeps scenes small.
MAX_COUNT = 20

NOUN_SET = frozenset(NOUNS)
COLOR_SET = frozenset(COLORS)
STYLE_SET = frozenset(STYLES)
RELATION_SET = frozenset(RELATIONS)


def alternate_color(color: str) -> str:
    """First vocabulary color that differs from ``color``."""
    return next(c for c in COLORS if c != color)
