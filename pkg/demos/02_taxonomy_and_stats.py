"""Retargeting source categories onto the seven sorting classes.

Category names differ wildly across public waste datasets. A taxonomy
file maps each (source, category) pair onto the closed class set
{bio, glass, metals_and_plastic, non_recyclable, other, paper, unknown}
plus background. Mapping conserves annotation counts class by class;
collapsing produces the single-class litter view used by detectors.

Run: python3 demos/02_taxonomy_and_stats.py
"""

from litterkit import (
    TaxonomyMap,
    collapse_to_single_class,
    default_taxonomy,
    ingest_yolo,
    map_categories,
    stats,
)
from litterkit.curate import render_stats

# Drink-container source with its four native classes.
labels = {
    f"img_{i:03}.jpg": f"{i % 4} 0.5 0.5 0.4 0.4\n" for i in range(20)
}
dims = {name: (512, 683) for name in labels}
drink = ingest_yolo(
    labels, dims,
    ["Aluminium Cans", "Glass bottles", "PET bottles", "HDPE"],
    "drinking_waste",
)

# The shipped default taxonomy already covers this source.
mapped = map_categories(drink, default_taxonomy())
print("classes after mapping:", [c.name for c in mapped.categories])
print("annotation count unchanged:", len(mapped.annotations) == len(drink.annotations))

# Unmapped categories fail loudly, listing every offender...
try:
    map_categories(drink, TaxonomyMap(entries={}))
except ValueError as exc:
    print("strict totality:", exc)

# ...unless a default target is given as an escape hatch.
fallback = map_categories(drink, TaxonomyMap(entries={}, default="unknown"))
print("with default=unknown:", [c.name for c in fallback.categories])

# Single-class collapse for the class-agnostic localization stage.
litter = collapse_to_single_class(mapped)
print("collapsed classes:", [c.name for c in litter.categories])

print("\n" + render_stats(stats(mapped)))
