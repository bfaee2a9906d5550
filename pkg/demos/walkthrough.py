"""Narrated tour: identify a few small graphs and check the formulas.

Run from the repository root:

    python demos/walkthrough.py
"""

from pathlib import Path

from degid import algorithm1, check_formulas, garcia_puente, load_graph, trek_weights
from degid.polyring import var_name

GRAPHS = Path(__file__).parent / "graphs"


def show(title, path, d=2):
    graph = load_graph(path)
    print(f"== {title} ({path.name})")
    print(f"   w_trek = {trek_weights(graph).w_trek}, d = {d}")
    report = algorithm1(graph, d)
    print(f"   verdict: {report.verdict}")
    for q in report.identification_order:
        f = report.formulas[q]
        if f.polynomial is None:
            continue
        print(f"   {var_name(q):8s} from {f.polynomial.dehomogenize()}   (plain degree {f.plain_degree})")
    if report.verdict == "yes":
        check = check_formulas(graph, report, trials=10)
        print(f"   exact check at 10 random points: {'passed' if check.passed else 'FAILED'}")
    return graph, report


def main():
    show("instrumental variable", GRAPHS / "instrument.json")
    graph, report = show("treatment with a confounded mediator", GRAPHS / "front_door_confounded.json")
    baseline = garcia_puente(graph)
    ay = ("l", 3, 4)
    print(f"   full-basis baseline finds l_{{3,4}} with plain degree {baseline.formulas[ay].plain_degree}, "
          f"the degree-bounded search with {report.formulas[ay].plain_degree}")
    show("two confounded pairs", GRAPHS / "two_confounders.json")
    for d in (2, 5):
        show("bow (not identifiable)", GRAPHS / "bow.json", d)


if __name__ == "__main__":
    main()
