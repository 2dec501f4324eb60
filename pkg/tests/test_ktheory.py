import pytest

from solk.common import ROOT, AxiomGateError, EXIT_AXIOM
from solk.exact_linalg import FGAbelianGroup, IntMatrix
from solk.ktheory import (
    KTheoryReport,
    StationaryLimit,
    closed_form_stable,
    full_report,
    groups_from_matrix,
    k_ruelle_stable,
    k_ruelle_unstable,
    k_stable_filtration,
    k_unstable,
    render_report_text,
    ruelle_stable_from_unstable,
    ruelle_unstable_from_matrix,
    same_groups,
    stationary_limit,
)
from solk.presentation import adjacency_matrix, iterate_presentation, load_presentation, parse_presentation

Z = FGAbelianGroup(1)


def corpus(name):
    return load_presentation(ROOT / "corpus" / f"{name}.sol")


@pytest.mark.parametrize("n", range(2, 11))
def test_full_shift_groups(n):
    P = corpus(f"power{n}")
    ru = k_ruelle_unstable(P)
    rs = k_ruelle_stable(P)
    torsion = (n - 1,) if n > 2 else ()
    assert ru.k0 == FGAbelianGroup(1, torsion)
    assert ru.k1 == Z
    assert rs.k0 == FGAbelianGroup(1, torsion)
    assert rs.k1 == Z

    u = k_unstable(P)
    assert isinstance(u.k0, StationaryLimit)
    assert u.k0.display == f"Z[1/{n}]"
    assert u.k1 == Z
    assert u.k0_order is not None


def test_fib_groups():
    P = corpus("fib")
    assert k_ruelle_unstable(P).k0 == Z
    assert k_ruelle_unstable(P).k1 == Z
    assert k_ruelle_stable(P).k0 == Z
    assert k_ruelle_stable(P).k1 == Z
    u = k_unstable(P)
    assert u.k0.as_group() == FGAbelianGroup(2)
    assert u.describe() == "K0 = Z^2, K1 = Z"


def test_stationary_limit_of_singular_matrix():
    limit = stationary_limit(IntMatrix.from_rows([[1, 1], [1, 1]]))
    assert limit.eventual_rank == 1
    assert limit.as_group() is None
    assert limit.display == "lim(Z^2, M), eventual rank 1"
    assert limit.to_json()["kind"] == "stationary_limit"


def test_identity_with_gate_bypassed():
    P = parse_presentation("edges: a / a -> a")
    ru = k_ruelle_unstable(P, gate=False)
    assert ru.k0 == FGAbelianGroup(2)
    assert ru.k1 == FGAbelianGroup(2)
    rs = k_ruelle_stable(P, gate=False)
    assert same_groups(ru, rs)


def test_identity_is_gated():
    with pytest.raises(AxiomGateError) as e:
        k_ruelle_unstable(parse_presentation("edges: a / a -> a"))
    assert e.value.exit_code == EXIT_AXIOM
    assert "not expanding" in str(e.value)
    assert e.value.report is not None


def test_stable_groups_with_free_and_torsion_cokernel():
    # I - M has Smith diagonal (0, 2)
    M = IntMatrix.from_rows([[1, 0], [0, -1]])
    ru = ruelle_unstable_from_matrix(M)
    assert ru.k0 == FGAbelianGroup(2, (2,))
    assert ru.k1 == FGAbelianGroup(2)
    rs = ruelle_stable_from_unstable(ru)
    assert rs.k0 == FGAbelianGroup(2, (2,))
    assert rs.k1 == FGAbelianGroup(2)
    assert same_groups(rs, closed_form_stable(M))


def test_duality_transpose_and_closed_form_on_corpus():
    for name in ["fib", "three_edge"] + [f"power{n}" for n in range(2, 11)]:
        M = adjacency_matrix(corpus(name))
        groups = groups_from_matrix(M)
        flipped = groups_from_matrix(M.transpose())
        assert same_groups(groups.Ru, groups.Rs)
        assert same_groups(groups.Ru, flipped.Ru)
        assert same_groups(groups.Rs, closed_form_stable(M))


def test_three_edge_groups():
    ru = k_ruelle_unstable(corpus("three_edge"))
    assert ru.k0 == FGAbelianGroup(1, (3,))
    assert ru.k1 == Z


def test_iterate_changes_ruelle_groups():
    P = corpus("power2")
    assert k_ruelle_unstable(P).k0 == Z
    assert k_ruelle_unstable(iterate_presentation(P, 2)).k0 == FGAbelianGroup(1, (3,))


def test_stable_filtration():
    assert k_stable_filtration(corpus("power2"), 3) == [2, 4, 8]
    assert k_stable_filtration(corpus("fib"), 2) == [5, 13]
    assert k_stable_filtration(corpus("three_edge"), 1) == [8]


def test_full_report_fib():
    report = full_report(corpus("fib"))
    assert report.axioms["passed"]
    assert report.duality_check is True
    assert report.closed_form_check is True
    assert report.transpose_check is True
    assert report.Ru.K0 == {"free_rank": 1, "torsion": []}
    assert report.U.K0["group"] == {"free_rank": 2, "torsion": []}
    assert report.perron["exact"] is False
    assert report.stable_filtration[:2] == [5, 13]
    assert report.citations
    assert not report.errors


def test_full_report_json_round_trip():
    report = full_report(corpus("power3"))
    assert KTheoryReport.model_validate_json(report.model_dump_json()) == report


def test_full_report_skips_nonorientable():
    report = full_report(corpus("nonorientable"))
    assert report.axioms["orientable"]["status"] == "no"
    assert report.skipped == ["perron", "U", "Ru", "Rs", "stable_filtration"]
    assert report.Ru is None


def test_full_report_identity():
    report = full_report(corpus("identity"))
    assert report.axioms["passed"] is False
    assert report.perron["exact"] is True
    assert report.Ru is None
    assert "Ru: axioms fail" in report.skipped
    text = render_report_text(report)
    assert "axioms: FAIL" in text
    assert "skipped: Ru: axioms fail" in text


def test_render_report_text():
    text = render_report_text(full_report(corpus("power3")))
    assert "U: K0 = Z[1/3], K1 = Z" in text
    assert "Ru: K0 = Z + Z/2, K1 = Z" in text
    assert "duality_check: ok" in text
    assert "lambda: 3" in text and "(exact)" in text
