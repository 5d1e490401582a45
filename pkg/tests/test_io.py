import json
import math

import numpy as np
import pytest

from wcrisk.errors import InputError
from wcrisk.io import (
    ReturnsTable,
    data_path,
    estimate_moments,
    load_distribution,
    load_problem,
    load_spectra,
    problem_from_dict,
    problem_to_dict,
    read_returns_csv,
)
from wcrisk.moments import MomentMatrixPair
from wcrisk.portfolio import solve, solve_polytopic
from wcrisk.spectra import CVaR, Exponential

PROBLEMS = ["problem_simplex.json", "problem_returns.json", "problem_polytopic.json"]


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestEstimate:
    def test_identical_rows(self):
        mm = estimate_moments(ReturnsTable(["a", "b"], [[0.1, 0.2], [0.1, 0.2]]))
        assert np.all(mm.cov == 0.0)

    def test_unbiased_denominator(self):
        mm = estimate_moments(ReturnsTable(["a"], [[0.0], [2.0]]))
        assert mm.mean.tolist() == [1.0] and mm.cov.tolist() == [[2.0]]

    def test_matches_numpy(self, rng):
        R = rng.normal(size=(50, 4))
        mm = estimate_moments(ReturnsTable(list("abcd"), R))
        assert np.allclose(mm.cov, np.cov(R, rowvar=False), atol=1e-15)

    def test_monte_carlo(self):
        rng = np.random.default_rng(2)
        mu = np.array([0.01, -0.02, 0.05])
        L = np.array([[0.1, 0, 0], [0.05, 0.2, 0], [-0.02, 0.1, 0.3]])
        cov = L @ L.T
        T = 1000
        mm = estimate_moments(ReturnsTable(list("abc"), mu + rng.normal(size=(T, 3)) @ L.T))
        se_mean = np.sqrt(np.diag(cov) / T)
        assert np.all(np.abs(mm.mean - mu) <= 3 * se_mean)
        # normal data: var(S_ij) = (S_ii S_jj + S_ij^2) / (T - 1)
        se_cov = np.sqrt((np.outer(np.diag(cov), np.diag(cov)) + cov**2) / (T - 1))
        assert np.all(np.abs(mm.cov - cov) <= 3 * se_cov)

    def test_too_few_rows(self):
        with pytest.raises(InputError):
            ReturnsTable(["a"], [[1.0]])


class TestCSV:
    def test_fixture_reproduces_moments(self):
        stored = json.loads(data_path("moments.json").read_text())
        mm = estimate_moments(read_returns_csv(data_path("returns.csv")))
        assert mm == MomentMatrixPair(stored["mu"], stored["sigma"])
        assert mm.mean.tolist() == stored["mu"]
        assert mm.cov.tolist() == stored["sigma"]

    def test_non_numeric_cell(self, tmp_path):
        p = write(tmp_path, "r.csv", "a,b\n0.1,0.2\n0.3,abc\n")
        with pytest.raises(InputError, match=r"r.csv:3: non-numeric cell 'abc'"):
            read_returns_csv(p)

    def test_missing_cell(self, tmp_path):
        p = write(tmp_path, "r.csv", "a,b\n0.1,0.2\n0.3\n")
        with pytest.raises(InputError, match=r":3: expected 2 cells"):
            read_returns_csv(p)

    def test_single_row(self, tmp_path):
        with pytest.raises(InputError, match="at least 2"):
            read_returns_csv(write(tmp_path, "r.csv", "a\n0.1\n"))


class TestDistribution:
    def test_json(self):
        d = load_distribution(data_path("distribution.json"))
        assert len(d) == 5 and d.mean() == pytest.approx(0.55)

    def test_csv_with_header(self, tmp_path):
        d = load_distribution(write(tmp_path, "d.csv", "atom,prob\n1,0.25\n3,0.75\n"))
        assert d.atoms.tolist() == [1.0, 3.0] and d.probs.tolist() == [0.25, 0.75]

    def test_csv_equal_weights(self, tmp_path):
        d = load_distribution(write(tmp_path, "d.csv", "1\n2\n3\n4\n"))
        assert d.mean() == 2.5

    def test_bad_probabilities(self, tmp_path):
        with pytest.raises(InputError):
            load_distribution(write(tmp_path, "d.json", '{"atoms": [1, 2], "probs": [0.5, 0.6]}'))


class TestSpectra:
    def test_shorthand(self):
        assert load_spectra("cvar:0.05") == [CVaR(0.05)]

    def test_file(self):
        specs = load_spectra(str(data_path("spectra.json")))
        assert specs[0] == CVaR(0.05) and specs[1] == Exponential(10.0) and len(specs) == 3

    def test_bad(self, tmp_path):
        with pytest.raises(InputError):
            load_spectra("nonsense")
        p = write(tmp_path, "s.json", '[{"kind": "cvar"}]')
        with pytest.raises(InputError, match=r"\[0\].*epsilon"):
            load_spectra(str(p))


class TestProblem:
    @pytest.mark.parametrize("name", PROBLEMS)
    def test_round_trip_bit_for_bit(self, name, tmp_path):
        def run(problem):
            if problem.vertices:
                return solve_polytopic(problem.polytope, problem.vertices, problem.spectra, problem.tol)
            return solve(problem.polytope, problem.moments, problem.spectra, problem.tol)

        first = load_problem(data_path(name))
        sol1 = run(first)
        out = tmp_path / "again.json"
        out.write_text(json.dumps(problem_to_dict(first)))
        second = load_problem(out)
        sol2 = run(second)
        assert second.moments == first.moments
        assert sol2.objective == sol1.objective
        assert np.array_equal(sol2.x, sol1.x)
        assert problem_to_dict(second) == problem_to_dict(first)

    def test_returns_reference(self):
        p = load_problem(data_path("problem_returns.json"))
        assert p.moments == estimate_moments(read_returns_csv(data_path("returns.csv")))

    def test_syntax_error_has_location(self, tmp_path):
        p = write(tmp_path, "p.json", '{\n  "mu": [0.1,\n}')
        with pytest.raises(InputError, match=r"p.json:3:"):
            load_problem(p)

    @pytest.mark.parametrize(
        "patch,match",
        [
            ({"sigma": [[1.0, 0.0]]}, "sigma"),
            ({"sigma": [[1.0, 2.0], [2.0, 1.0]]}, "not PSD"),
            ({"spectra": [{"kind": "cvar", "epsilon": 2.0}]}, "spectra"),
            ({"constraints": {"bounds": [[0, 1]]}}, "bounds"),
            ({"uncertainty": {"vertices": []}}, "vertices"),
            ({"assets": ["a"]}, "assets"),
        ],
    )
    def test_field_errors(self, patch, match):
        base = {"mu": [0.1, 0.2], "sigma": [[1.0, 0.0], [0.0, 1.0]], "spectra": ["cvar:0.1"]}
        base.update(patch)
        with pytest.raises(InputError, match=match):
            problem_from_dict(base)

    def test_unbounded_constraints(self):
        data = {"mu": [0.1, 0.2], "sigma": [[1.0, 0.0], [0.0, 1.0]], "spectra": ["cvar:0.1"],
                "constraints": {"E": [[1, 1]], "f": [1]}}
        from wcrisk.errors import UnboundedError

        with pytest.raises(UnboundedError):
            problem_from_dict(data)

    def test_default_simplex(self):
        p = problem_from_dict({"mu": [0.1, 0.2], "sigma": np.eye(2).tolist(), "spectra": ["uniform"]})
        assert p.polytope.contains([0.5, 0.5]) and p.assets == ["x1", "x2"]
        assert math.isclose(p.tol, 1e-6)
