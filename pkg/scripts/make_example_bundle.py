#!/usr/bin/env python3
"""Write an example bundle: minimal diagrams per KO-dimension plus one
normalized, comparison-ready lift.  Point the CLI at the result:

    python scripts/make_example_bundle.py --out examples_bundle.json
    finspec validate examples_bundle.json
    finspec axioms examples_bundle.json --diagram minimal_d6
    finspec normalize examples_bundle.json --lift step
    finspec compare examples_bundle.json --lift step --form-a w --with-fermions
"""

import argparse

from finspec.bundle import Bundle, save_bundle
from finspec.catalog import minimal_diagram
from finspec.krajewski import realize
from finspec.lifting import diagonalize_bases, inherit_source_dirac, normalize
from finspec.sampling import (
    random_arrow,
    random_compatible_target,
    random_diagram,
    random_hermitian_form,
    random_lift,
    rng_from_seed,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="examples_bundle.json")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    rng = rng_from_seed(args.seed)
    b = Bundle()
    for d in range(8):
        b.diagrams[f"minimal_d{d}"] = minimal_diagram(d, 1.0)

    source = random_diagram(rng, 6, max_fiber=2, edge_prob=0.7, ensure_edge=True)
    arrow = random_arrow(rng, source.profile, s_max=2, alpha_max=2, n0_max=1)
    target = random_compatible_target(rng, source, arrow, max_fiber=2,
                                      edge_prob=0.6, ensure_edge=True)
    lift = inherit_source_dirac(normalize(diagonalize_bases(
        random_lift(rng, source, arrow, target), 1e-10), 1e-10), 1e-10)

    b.profiles["A"] = lift.source.profile
    b.profiles["B"] = arrow.target
    b.diagrams["step_source"] = lift.source
    b.diagrams["step_target"] = target
    b.arrows["step_arrow"] = arrow
    b.lifts["step"] = lift
    b.forms["w"] = random_hermitian_form(rng, source.profile, scale=0.7)
    b.triples["step_source_triple"] = realize(lift.source)

    save_bundle(b, args.out)
    print(f"wrote {args.out}: {len(b.diagrams)} diagrams, {len(b.lifts)} lift(s)")


if __name__ == "__main__":
    main()
