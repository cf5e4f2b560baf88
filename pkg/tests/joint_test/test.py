#!/usr/bin/env python3
"""
test.py - claim scores, weight fusion, the tree solver against brute force and structure decoding
"""

import itertools
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from harness import case_config, log_info, run_suite  # noqa: E402

from config import PHI_PRESETS, ComponentType, ConfigError, ContractError, PhiWeights  # noqa: E402
from document import ArgumentComponent  # noqa: E402
from joint import (NO_TARGET, apply_structure, build_weights, claim_scores, joint_paragraph,  # noqa: E402
                   reachability, solve_tree, validate_solution)

C, P, MC = ComponentType.CLAIM, ComponentType.PREMISE, ComponentType.MAJOR_CLAIM


def _components(n):
    return [ArgumentComponent(id=f"T{i + 1}", ctype=P, start=10 * i, end=10 * i + 5) for i in range(n)]


def _acyclic(targets):
    for i in range(len(targets)):
        seen = set()
        node = i
        while node != NO_TARGET:
            if node in seen:
                return False
            seen.add(node)
            node = targets[node]
    return True


_forests = {}


def _all_forests(n):
    """Every acyclic target assignment over n nodes, one row per assignment"""
    if n not in _forests:
        options = [[NO_TARGET] + [j for j in range(n) if j != i] for i in range(n)]
        _forests[n] = np.array([t for t in itertools.product(*options) if _acyclic(t)], dtype=int)
    return _forests[n]


def _objectives(W, forests):
    n = W.shape[0]
    picked = W[np.arange(n), np.where(forests == NO_TARGET, 0, forests)]
    return np.where(forests == NO_TARGET, 0.0, picked).sum(axis=1)


def _brute_force(W):
    return max(0.0, float(_objectives(W, _all_forests(W.shape[0])).max()))


def _smallest_optimum(W):
    """Relation matrix of the lexicographically smallest optimal forest"""
    n = W.shape[0]
    forests = _all_forests(n)
    values = _objectives(W, forests)
    best = None
    for targets in forests[values == values.max()]:
        x = np.zeros((n, n), dtype=int)
        for i, j in enumerate(targets):
            if j != NO_TARGET:
                x[i, j] = 1
        if best is None or tuple(x.ravel()) < tuple(best.ravel()):
            best = x
    return best


def test_claim_scores():
    R = np.zeros((4, 4))
    R[0, 1] = R[2, 1] = R[3, 1] = 1
    cs = claim_scores(R)
    assert abs(cs[1] - 1.0) < 1e-12
    assert abs(cs[0] - 1 / 3) < 1e-12
    assert np.allclose(claim_scores(np.zeros((2, 2))), [1.0, 1.0])
    assert np.allclose(claim_scores(np.zeros((1, 1))), [0.0])
    try:
        claim_scores(np.zeros((2, 3)))
        raise AssertionError("non-square relation matrix accepted")
    except ContractError:
        pass


def test_build_weights_two_components():
    phi = case_config(__file__).phi
    assert phi == PHI_PRESETS["balanced"]
    R = np.array([[0, 1], [0, 0]])
    W = build_weights(R, [P, C], phi)
    assert abs(W[0, 1] - 1.0) < 1e-12
    assert abs(W[1, 0] + 0.25) < 1e-12
    assert W[0, 0] == 0.0 and W[1, 1] == 0.0

    R3 = np.array([[0, 1, 0], [0, 0, 0], [1, 1, 0]])
    naive = build_weights(R3, [P, C, P], PhiWeights(1.0, 0.0, 0.0))
    assert np.array_equal(naive, np.where(np.eye(3) == 1, 0, R3))


def test_build_weights_contracts():
    for types in ([MC, C], [P]):
        try:
            build_weights(np.zeros((2, 2)), types)
            raise AssertionError(f"accepted types {types}")
        except ContractError:
            pass
    try:
        build_weights(np.zeros((2, 2)), [P, C], PhiWeights(-0.1, 0.5, 0.5))
        raise AssertionError("negative phi accepted")
    except ConfigError:
        pass


def test_solver_matches_brute_force():
    rng = np.random.default_rng(11)
    for n in range(2, 7):
        for _ in range(1000):
            W = rng.normal(size=(n, n))
            np.fill_diagonal(W, 0.0)
            solution = solve_tree(W)
            assert validate_solution(solution.x) == [], solution.x
            assert abs(solution.objective - _brute_force(W)) < 1e-9, (n, W)
            assert np.array_equal(solution.reach, reachability(solution.x))


def test_solver_breaks_ties_lexicographically():
    rng = np.random.default_rng(13)
    for n in range(2, 6):
        for _ in range(200):
            # small integer weights make equal optima common
            W = rng.integers(-1, 3, size=(n, n)).astype(float)
            np.fill_diagonal(W, 0.0)
            assert np.array_equal(solve_tree(W).x, _smallest_optimum(W)), W
    # two disjoint single edges of equal weight: the edge of node 0 to the highest index wins
    W = np.array([[0.0, 1.0, 1.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    assert solve_tree(W).edges() == [(0, 2)]
    assert np.array_equal(solve_tree(np.zeros((3, 3))).x, np.zeros((3, 3), dtype=int))


def test_solver_edge_cases():
    assert solve_tree(np.zeros((0, 0))).objective == 0.0
    assert solve_tree(np.zeros((1, 1))).edges() == []
    assert solve_tree(-np.ones((3, 3))).edges() == []
    # a two-cycle of positive weights keeps only its heavier edge
    W = np.array([[0.0, 2.0], [3.0, 0.0]])
    assert solve_tree(W).edges() == [(1, 0)]
    for bad in (np.zeros((2, 3)), np.array([[0.0, np.nan], [0.0, 0.0]])):
        try:
            solve_tree(bad)
            raise AssertionError("invalid weight matrix accepted")
        except ContractError:
            pass


def test_validate_solution_reports_violations():
    assert validate_solution(np.array([[1, 0], [0, 0]])) == ["self relation"]
    assert "cycle" in validate_solution(np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]]))
    assert "node 0 out-degree 2" in validate_solution(np.array([[0, 1, 1], [0, 0, 0], [0, 0, 0]]))
    assert validate_solution(np.zeros((3, 3), dtype=int)) == []


def test_apply_structure_star_chain_empty():
    comps = _components(3)
    star = np.array([[0, 0, 0], [1, 0, 0], [1, 0, 0]])
    chain = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]])

    for x in (star, chain):
        solution = solve_tree(np.where(x == 1, 1.0, -1.0))
        assert np.array_equal(solution.x, x)
        types, relations = apply_structure(solution, comps)
        assert [types[c.id] for c in comps] == [C, P, P]
        assert {(r.source, r.target) for r in relations} == {
            (comps[i].id, comps[j].id) for i, j in zip(*np.nonzero(x))}

    types, relations = apply_structure(solve_tree(np.zeros((3, 3))), comps)
    assert relations == [] and set(types.values()) == {C}

    types, _ = apply_structure(solve_tree(np.zeros((3, 3))), comps, {comps[0].id: MC})
    assert types[comps[0].id] is MC
    try:
        apply_structure(solve_tree(np.zeros((2, 2))), comps)
        raise AssertionError("solution size mismatch accepted")
    except ContractError:
        pass


def test_joint_paragraph_fallback():
    comps = _components(3)
    phi = case_config(__file__).phi
    predicted = {c.id: P for c in comps}
    silent = np.zeros((3, 3), dtype=int)

    with_fallback = joint_paragraph(comps, silent, predicted, phi)
    assert with_fallback.diagnostics["fallback"]
    assert [with_fallback.types[c.id] for c in comps] == [C, P, P]
    assert {(r.source, r.target) for r in with_fallback.relations} == {("T2", "T1"), ("T3", "T1")}

    without = joint_paragraph(comps, silent, predicted, phi, fallback=False)
    assert not without.diagnostics["fallback"]
    assert without.relations == [] and set(without.types.values()) == {C}

    intro = joint_paragraph(comps, silent, predicted, phi, body=False)
    assert not intro.diagnostics["fallback"]

    single = joint_paragraph(comps[:1], np.zeros((1, 1)), predicted, phi)
    assert single.types == {"T1": C} and single.relations == []
    assert joint_paragraph([], np.zeros((0, 0)), {}, phi).types == {}


def test_joint_paragraph_follows_strong_relations():
    comps = _components(4)
    R = np.zeros((4, 4), dtype=int)
    R[1, 0] = R[2, 0] = R[3, 2] = 1
    predicted = {"T1": C, "T2": P, "T3": P, "T4": P}
    result = joint_paragraph(comps, R, predicted, case_config(__file__).phi)
    assert {(r.source, r.target) for r in result.relations} == {("T2", "T1"), ("T3", "T1"), ("T4", "T3")}
    assert result.types["T1"] is C
    assert result.diagnostics["objective"] > 0


def main():
    log_info("Starting joint test")
    return run_suite("joint_test", globals())


if __name__ == '__main__':
    sys.exit(0 if main() else 1)
