"""Joint optimisation of component types and argumentative relations.

The base classifiers' relation decisions R and type decisions are fused into a
weight matrix W, and per paragraph the forest x maximising sum(w_ij * x_ij) is found
exactly under: out-degree <= 1, no self relations, at most n - 1 relations and no
directed cycles (x_ij <= b_ij for the reachability closure b).
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from config import ComponentType, ContractError, PhiWeights, RelationType
from document import ArgumentComponent, ArgumentativeRelation

log = logging.getLogger(__name__)

EPS = 1e-12
NO_TARGET = -1


def claim_scores(R) -> np.ndarray:
    """cs_i = (relin_i - relout_i + n - 1) / (rel + n - 1); zero when undefined"""
    R = np.asarray(R, dtype=float)
    n = R.shape[0]
    if R.shape != (n, n):
        raise ContractError(f"relation matrix must be square, got {R.shape}")
    rel = R.sum()
    denominator = rel + n - 1
    if n <= 1 or denominator == 0:
        return np.zeros(n)
    relin = R.sum(axis=0)
    relout = R.sum(axis=1)
    return (relin - relout + n - 1) / denominator


def build_weights(R, types: Sequence[ComponentType], phi: Optional[PhiWeights] = None) -> np.ndarray:
    """w_ij = phi_r * r_ij + phi_cr * (cs_j - cs_i) + phi_c * [j predicted Claim]"""
    phi = phi or PhiWeights()
    phi.validate()
    R = np.asarray(R, dtype=float)
    n = R.shape[0]
    if len(types) != n:
        raise ContractError(f"{len(types)} type predictions for {n} components")
    for t in types:
        if t not in (ComponentType.CLAIM, ComponentType.PREMISE):
            raise ContractError(f"joint weights accept only claims and premises, got {t.value}")
    cs = claim_scores(R)
    cr = cs[np.newaxis, :] - cs[:, np.newaxis]
    c = np.tile(np.array([1.0 if t is ComponentType.CLAIM else 0.0 for t in types]), (n, 1))
    W = phi.r * R + phi.cr * cr + phi.c * c
    np.fill_diagonal(W, 0.0)
    return W


@dataclass
class IlpSolution:
    x: np.ndarray
    objective: float
    reach: np.ndarray
    explored: int = 0

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def edges(self) -> List[Tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.x))]


def reachability(x: np.ndarray) -> np.ndarray:
    """b_ij = 1 iff a directed path of relations leads from i to j"""
    n = x.shape[0]
    graph = nx.DiGraph()
    graph.add_nodes_from(range(n))
    graph.add_edges_from((int(i), int(j)) for i, j in zip(*np.nonzero(x)))
    b = np.zeros((n, n), dtype=int)
    for i in range(n):
        for j in nx.descendants(graph, i):
            b[i, j] = 1
    return b


def _solution(targets: Sequence[int], W: np.ndarray, explored: int) -> IlpSolution:
    n = len(targets)
    x = np.zeros((n, n), dtype=int)
    for i, j in enumerate(targets):
        if j != NO_TARGET:
            x[i, j] = 1
    objective = float(sum(W[i, j] for i, j in enumerate(targets) if j != NO_TARGET))
    return IlpSolution(x=x, objective=objective, reach=reachability(x), explored=explored)


def solve_tree(W, n: Optional[int] = None) -> IlpSolution:
    """Exact maximiser by depth-first branch and bound over each node's single target.

    Nodes are assigned in index order, trying "no target" first and then targets
    from the highest index down, so the first optimum found is the
    lexicographically smallest x. Only positive weights can enter an optimum:
    dropping an edge never breaks a constraint.
    """
    W = np.asarray(W, dtype=float)
    n = W.shape[0] if n is None else n
    if W.shape != (n, n):
        raise ContractError(f"weight matrix must be {n}x{n}, got {W.shape}")
    if not np.all(np.isfinite(W)):
        raise ContractError("weight matrix contains non-finite values")
    if n <= 1:
        return _solution([NO_TARGET] * n, W, 0)

    candidates = []
    gains = np.zeros(n)
    for i in range(n):
        positive = [j for j in range(n - 1, -1, -1) if j != i and W[i, j] > 0]
        candidates.append(positive)
        gains[i] = max((W[i, j] for j in positive), default=0.0)
    suffix = np.concatenate([np.cumsum(gains[::-1])[::-1], [0.0]])

    targets = [NO_TARGET] * n
    best = list(targets)
    best_value = 0.0
    explored = 0

    def reaches(a: int, b: int) -> bool:
        while a != NO_TARGET:
            if a == b:
                return True
            a = targets[a]
        return False

    # Explicit stack keeps deep paragraphs clear of the recursion limit
    stack = [(0, 0.0, iter([NO_TARGET] + candidates[0]))]
    while stack:
        i, value, options = stack[-1]
        choice = next(options, None)
        if choice is None:
            targets[i] = NO_TARGET
            stack.pop()
            continue
        if choice != NO_TARGET and reaches(choice, i):
            continue
        targets[i] = choice
        new_value = value + (W[i, choice] if choice != NO_TARGET else 0.0)
        explored += 1
        if i + 1 == n:
            if new_value > best_value + EPS:
                best_value = new_value
                best = list(targets)
            continue
        if new_value + suffix[i + 1] <= best_value + EPS:
            continue
        stack.append((i + 1, new_value, iter([NO_TARGET] + candidates[i + 1])))
    return _solution(best, W, explored)


def validate_solution(x) -> List[str]:
    """Constraint violations of a relation matrix; empty when it is a valid forest"""
    x = np.asarray(x, dtype=int)
    n = x.shape[0]
    violations = []
    if np.any((x != 0) & (x != 1)):
        violations.append("non-binary entry")
    if np.any(np.diag(x)):
        violations.append("self relation")
    for i in np.nonzero(x.sum(axis=1) > 1)[0]:
        violations.append(f"node {int(i)} out-degree {int(x[i].sum())}")
    if n and x.sum() > n - 1:
        violations.append(f"{int(x.sum())} relations for {n} components")
    graph = nx.DiGraph()
    graph.add_nodes_from(range(n))
    graph.add_edges_from((int(i), int(j)) for i, j in zip(*np.nonzero(x)) if i != j)
    if not nx.is_directed_acyclic_graph(graph):
        violations.append("cycle")
    return violations


def apply_structure(solution: IlpSolution, components: Sequence[ArgumentComponent],
                    predicted: Optional[Dict[str, ComponentType]] = None
                    ) -> Tuple[Dict[str, ComponentType], List[ArgumentativeRelation]]:
    """Relations from x; components without outgoing relation become claims, the rest premises"""
    if solution.n != len(components):
        raise ContractError(f"solution over {solution.n} nodes for {len(components)} components")
    predicted = predicted or {}
    types: Dict[str, ComponentType] = {}
    relations = []
    out_degree = solution.x.sum(axis=1)
    for i, comp in enumerate(components):
        if predicted.get(comp.id) is ComponentType.MAJOR_CLAIM:
            types[comp.id] = ComponentType.MAJOR_CLAIM
        else:
            types[comp.id] = ComponentType.PREMISE if out_degree[i] else ComponentType.CLAIM
    for i, j in solution.edges():
        relations.append(ArgumentativeRelation(id=f"R{len(relations) + 1}", source=components[i].id,
                                               target=components[j].id, rtype=RelationType.SUPPORT))
    return types, relations


@dataclass
class ParagraphStructure:
    types: Dict[str, ComponentType]
    relations: List[ArgumentativeRelation]
    diagnostics: Dict = field(default_factory=dict)


def heuristic_relation_matrix(n: int) -> np.ndarray:
    """Every component linked to the first one of its paragraph"""
    R = np.zeros((n, n), dtype=int)
    R[1:, 0] = 1
    return R


def joint_paragraph(components: Sequence[ArgumentComponent], R, predicted: Dict[str, ComponentType],
                    phi: Optional[PhiWeights] = None, body: bool = True,
                    fallback: bool = True) -> ParagraphStructure:
    """Run the joint model over the claims and premises of one paragraph.

    With `fallback`, body paragraphs in which the base classifiers predict neither a
    claim nor a relation are first rewritten by the heuristic baseline.
    """
    R = np.asarray(R, dtype=int)
    n = len(components)
    diagnostics = {"n": n, "objective": 0.0, "explored": 0, "bound": n ** n if n else 0, "fallback": False}
    types = [predicted[c.id] for c in components]
    if n == 0:
        return ParagraphStructure({}, [], diagnostics)
    if n == 1:
        solution = solve_tree(np.zeros((1, 1)))
        t, rels = apply_structure(solution, components, {})
        return ParagraphStructure(t, rels, diagnostics)

    if fallback and body and R.sum() == 0 and ComponentType.CLAIM not in types:
        R = heuristic_relation_matrix(n)
        types = [ComponentType.CLAIM] + [ComponentType.PREMISE] * (n - 1)
        diagnostics["fallback"] = True
        log.info("paragraph of %d components without claims or relations: heuristic fallback applied", n)

    W = build_weights(R, types, phi)
    solution = solve_tree(W)
    problems = validate_solution(solution.x)
    if problems:
        raise ContractError(f"solver produced an invalid structure: {', '.join(problems)}")
    diagnostics["objective"] = solution.objective
    diagnostics["explored"] = solution.explored
    t, rels = apply_structure(solution, components, {})
    return ParagraphStructure(t, rels, diagnostics)
