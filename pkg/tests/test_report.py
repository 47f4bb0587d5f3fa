import numpy as np
import pytest

from fampca.errors import ParseError, UnknownId
from fampca.evaluate import individual_scree
from fampca.io import (
    write_family_file,
    write_matrix_csv,
    write_scores_csv,
    write_strata,
)
from fampca.methods import naive_scores
from fampca.model import FamilyStructure, drop_monomorphic, scale_genotypes
from fampca.report import (
    PALETTE,
    PlotSpec,
    _heat_color,
    _num,
    _size_class_color,
    render,
)
from fampca.simulate import simulate_census_dataset


@pytest.fixture
def plot_files(tmp_path):
    ids = tuple(f"I{j}" for j in range(6))
    rng = np.random.default_rng(0)
    scores = tmp_path / "scores.csv"
    strata = tmp_path / "strata.csv"
    families = tmp_path / "families.tsv"
    write_scores_csv(ids, rng.standard_normal((6, 3)), scores)
    write_strata(np.array([1, 1, 2, 2, 3, 3]), ids, strata)
    write_family_file(FamilyStructure(6, ((0, 1), (3, 4, 5))), ids, families)
    return {"scores": str(scores), "strata": str(strata), "families": str(families)}


def test_plotspec_validation(plot_files):
    with pytest.raises(ParseError, match="kind"):
        PlotSpec("pie", scores=plot_files["scores"])
    with pytest.raises(ParseError):
        PlotSpec("scatter")
    with pytest.raises(ParseError):
        PlotSpec("scree")
    with pytest.raises(ParseError):
        PlotSpec("heatmap")
    with pytest.raises(ParseError):
        PlotSpec("scatter", scores=plot_files["scores"], highlight="F001")


def test_scatter_has_one_circle_per_individual(plot_files):
    svg = render(PlotSpec("scatter", scores=plot_files["scores"]))
    assert svg.count("<circle") == 6
    assert svg.startswith("<svg")
    assert svg.rstrip().endswith("</svg>")


def test_render_is_deterministic(plot_files):
    spec = PlotSpec(
        "scatter", scores=plot_files["scores"], strata=plot_files["strata"]
    )
    assert render(spec) == render(spec)


def test_scatter_colors_by_stratum(plot_files):
    svg = render(
        PlotSpec("scatter", scores=plot_files["scores"], strata=plot_files["strata"])
    )
    for color in PALETTE[:3]:
        assert svg.count(color) >= 2
    assert PALETTE[3] not in svg


def test_scatter_highlight_family(plot_files):
    svg = render(
        PlotSpec(
            "scatter",
            scores=plot_files["scores"],
            families=plot_files["families"],
            highlight="F001",
        )
    )
    assert "red" in svg
    with pytest.raises(UnknownId):
        render(
            PlotSpec(
                "scatter",
                scores=plot_files["scores"],
                families=plot_files["families"],
                highlight="F999",
            )
        )


def test_scatter_component_out_of_range(plot_files):
    with pytest.raises(ParseError, match="out of range"):
        render(PlotSpec("scatter", scores=plot_files["scores"], x=5))
    with pytest.raises(ParseError, match="out of range"):
        render(PlotSpec("scatter", scores=plot_files["scores"], y=0))


def test_number_formatting_never_prints_negative_zero():
    assert _num(-0.001) == "0.00"
    assert _num(0.0) == "0.00"
    assert _num(1.5) == "1.50"
    assert _num(-1.234) == "-1.23"


def test_heat_color_endpoints():
    assert _heat_color(0.0) == "#2166ac"
    assert _heat_color(1.0) == "#b2182b"
    assert _heat_color(0.5) == "#f7f7f7"


def test_size_class_colors():
    assert _size_class_color(1) == "black"
    assert _size_class_color(2) == "red"
    assert _size_class_color(3) == "green"
    assert _size_class_color(4) == "blue"


def test_heatmap_marks_missing_cells(tmp_path):
    table = tmp_path / "table.csv"
    write_matrix_csv(
        ("r1", "r2"), ("c1", "c2"), np.array([[1.0, np.nan], [0.0, 0.5]]), table
    )
    svg = render(PlotSpec("heatmap", table=str(table)))
    assert "#cccccc" in svg
    assert "#2166ac" in svg and "#b2182b" in svg


def test_scree_renders_one_polyline_per_row(plot_files):
    svg = render(PlotSpec("scree", scores=plot_files["scores"]))
    assert svg.count("<polyline") == 6


def test_scree_signal_lifts_family_curves():
    """A big family's smoothed scree curves sit above the singleton cloud
    at both ends of the component range."""
    sim = simulate_census_dataset(9, [2] * 50 + [3] * 6 + [4], 300, K=5, p=600)
    G, _ = drop_monomorphic(sim.genotypes)
    S = scale_genotypes(G)
    res = naive_scores(S, 420)
    _, smooth = individual_scree(res)
    quad = [f for f in sim.pedigree.families if len(f) == 4][0]
    singles = list(sim.pedigree.singletons)
    fam_mean = smooth[list(quad)].mean(axis=0)
    single_median = np.median(smooth[singles], axis=0)
    diff = fam_mean - single_median
    print(f"scree lift head={np.round(diff[:3], 3)} tail={np.round(diff[-3:], 3)}")
    assert np.all(diff[:3] > 0)
    assert np.all(diff[-3:] > 0)
