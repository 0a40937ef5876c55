"""Statistical causal discovery over binary co-occurrence data.

Implements Bernoulli structural causal models for ancestral sampling,
stratified chi-squared / G-squared conditional-independence tests, the
constraint-based PC algorithm (stable variant: edge removals within one
level are applied synchronously), exact d-separation for test oracles,
CPDAG construction from a known DAG, and SHD / precision / recall / F1
evaluation of recovered structures.
"""

from __future__ import annotations

import itertools
import random
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaincc

from .causal_graph import CausalGraph, is_acyclic, topological_order


class DiscoveryError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Bernoulli SCMs and sampling


@dataclass
class BernoulliSCM:
    """Binary SCM: every variable is Bernoulli given its parents.

    cpts[v] is an array of length 2^|parents(v)| holding P(v=1 | parent
    configuration), indexed by the bits of the parent values in the order
    of sorted parent names.
    """

    dag: CausalGraph
    cpts: dict[str, np.ndarray]

    def __post_init__(self):
        if not is_acyclic(self.dag):
            raise DiscoveryError("SCM graph must be acyclic")
        for v in self.dag.nodes:
            n_par = len(self.dag.parents(v))
            cpt = np.asarray(self.cpts[v], dtype=np.float64)
            if cpt.shape != (2 ** n_par,):
                raise DiscoveryError(
                    f"cpt for {v!r} has shape {cpt.shape}, expected "
                    f"({2 ** n_par},)")
            if np.any(cpt < 0) or np.any(cpt > 1):
                raise DiscoveryError(f"cpt for {v!r} outside [0, 1]")
            self.cpts[v] = cpt

    def parent_order(self, v: str) -> list[str]:
        return sorted(self.dag.parents(v))


@dataclass
class BinaryDataset:
    columns: list[str]
    values: np.ndarray

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != len(self.columns):
            raise DiscoveryError("dataset shape does not match column list")
        if not np.isin(self.values, (0, 1)).all():
            raise DiscoveryError("dataset values must be 0/1")
        self.values = self.values.astype(np.uint8)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]


def sample_scm(scm: BernoulliSCM, n: int, seed: int) -> BinaryDataset:
    """Ancestral sampling in topological order; deterministic given seed."""
    if n <= 0:
        raise DiscoveryError("sample count must be positive")
    rng = np.random.default_rng(seed)
    order = topological_order(scm.dag)
    columns = list(scm.dag.nodes)
    data = np.zeros((n, len(columns)), dtype=np.uint8)
    col = {v: i for i, v in enumerate(columns)}
    for v in order:
        parents = scm.parent_order(v)
        cpt = scm.cpts[v]
        if parents:
            index = np.zeros(n, dtype=np.int64)
            for k, p in enumerate(parents):
                index |= data[:, col[p]].astype(np.int64) << k
            prob = cpt[index]
        else:
            prob = np.full(n, cpt[0])
        data[:, col[v]] = rng.random(n) < prob
    return BinaryDataset(columns=columns, values=data)


def random_dag(n_nodes: int, edge_prob: float, seed: int,
               names: list[str] | None = None) -> CausalGraph:
    """Random DAG: edges sampled over a random topological order."""
    rng = random.Random(seed)
    if names is None:
        names = [f"x{i}" for i in range(n_nodes)]
    order = list(names)
    rng.shuffle(order)
    edges = set()
    for i in range(n_nodes):
        for j in range(i + 1, n_nodes):
            if rng.random() < edge_prob:
                edges.add((order[i], order[j]))
    return CausalGraph(nodes=list(names), edges=edges)


def random_scm(dag: CausalGraph, seed: int, low: float = 0.1,
               high: float = 0.9) -> BernoulliSCM:
    """Random CPTs with conditional probabilities kept away from 0/1."""
    rng = random.Random(seed)
    cpts = {}
    for v in dag.nodes:
        k = len(dag.parents(v))
        cpts[v] = np.array([rng.uniform(low, high) for _ in range(2 ** k)])
    return BernoulliSCM(dag=dag, cpts=cpts)


# ---------------------------------------------------------------------------
# Conditional-independence testing


@dataclass
class CiResult:
    statistic: float
    df: int
    p_value: float
    independent: bool


def contingency_table(d: BinaryDataset, x: str, y: str,
                      S) -> dict[tuple[int, ...], np.ndarray]:
    """2x2 observed counts of (x, y) for every configuration of S.

    Every configuration of the conditioning variables appears in the
    output, including empty strata.
    """
    S = list(S)
    if x == y:
        raise DiscoveryError("x and y must differ")
    if x in S or y in S:
        raise DiscoveryError("x and y cannot be conditioned on")
    for name in (x, y, *S):
        if name not in d.columns:
            raise DiscoveryError(f"unknown variable {name!r}")
    xi = d.column(x).astype(np.int64)
    yi = d.column(y).astype(np.int64)
    code = np.zeros(len(xi), dtype=np.int64)
    for k, s in enumerate(S):
        code |= d.column(s).astype(np.int64) << k
    combined = (code << 2) | (xi << 1) | yi
    counts = np.bincount(combined, minlength=4 * (2 ** len(S)))
    out = {}
    for stratum in range(2 ** len(S)):
        config = tuple((stratum >> k) & 1 for k in range(len(S)))
        block = counts[4 * stratum: 4 * stratum + 4]
        out[config] = np.array([[block[0], block[1]],
                                [block[2], block[3]]], dtype=np.int64)
    return out


def chi_square_sf(statistic: float, df: int) -> float:
    """Upper tail of the chi-square distribution."""
    if statistic < 0:
        raise DiscoveryError("chi-square statistic cannot be negative")
    if df < 1:
        raise DiscoveryError("df must be >= 1")
    return float(gammaincc(df / 2.0, statistic / 2.0))


def ci_test(tables, kind: str = "g2", alpha: float = 0.01) -> CiResult:
    """Stratified chi-squared or G-squared independence test.

    The statistic is summed over strata; a stratum with a zero marginal
    (hence zero expected cells) is skipped and its degree of freedom
    subtracted. Zero observed cells contribute nothing to G-squared.
    """
    if kind not in ("chi2", "g2"):
        raise DiscoveryError(f"unknown test kind {kind!r}")
    if isinstance(tables, np.ndarray):
        tables = {(): tables}
    if isinstance(tables, (list, tuple)):
        tables = {(i,): t for i, t in enumerate(tables)}
    total = sum(int(t.sum()) for t in tables.values())
    if total == 0:
        raise DiscoveryError("all-zero contingency tables")

    statistic = 0.0
    df = 0
    for _, table in sorted(tables.items()):
        obs = np.asarray(table, dtype=np.float64)
        n = obs.sum()
        if n == 0:
            continue
        rows = obs.sum(axis=1)
        cols = obs.sum(axis=0)
        if np.any(rows == 0) or np.any(cols == 0):
            continue  # degenerate stratum: no information about the pair
        expected = np.outer(rows, cols) / n
        if kind == "chi2":
            statistic += float(((obs - expected) ** 2 / expected).sum())
        else:
            mask = obs > 0
            statistic += float(
                2.0 * (obs[mask] * np.log(obs[mask] / expected[mask])).sum())
        df += 1

    if df == 0:
        return CiResult(statistic=0.0, df=0, p_value=1.0, independent=True)
    p = chi_square_sf(statistic, df)
    return CiResult(statistic=statistic, df=df, p_value=p,
                    independent=p > alpha)


# ---------------------------------------------------------------------------
# Exact d-separation (test oracle for PC)


class DSeparationOracle:
    """Bitmask Bayes-ball d-separation over a known DAG.

    Calling convention matches the independence functions consumed by
    pc_from_independence: indices of x, y and an iterable of conditioning
    indices, returning True when x and y are d-separated given S.
    """

    def __init__(self, dag: CausalGraph):
        if not is_acyclic(dag):
            raise DiscoveryError("d-separation oracle requires a DAG")
        self.nodes = list(dag.nodes)
        index = {v: i for i, v in enumerate(self.nodes)}
        n = len(self.nodes)
        self.parents = [0] * n
        self.children = [0] * n
        for u, v in dag.edges:
            self.parents[index[v]] |= 1 << index[u]
            self.children[index[u]] |= 1 << index[v]

    @staticmethod
    def _bits(mask: int):
        while mask:
            low = mask & -mask
            yield low.bit_length() - 1
            mask ^= low

    def __call__(self, x: int, y: int, S) -> bool:
        zmask = 0
        for s in S:
            zmask |= 1 << s
        anz = zmask
        stack = list(self._bits(zmask))
        while stack:
            v = stack.pop()
            for p in self._bits(self.parents[v] & ~anz):
                anz |= 1 << p
                stack.append(p)

        vis_up = vis_down = 0
        stack = [(x, True)]
        while stack:
            v, up = stack.pop()
            bit = 1 << v
            if up:
                if vis_up & bit:
                    continue
                vis_up |= bit
            else:
                if vis_down & bit:
                    continue
                vis_down |= bit
            if v == y:
                return False
            if up:
                if not zmask & bit:
                    for p in self._bits(self.parents[v]):
                        stack.append((p, True))
                    for c in self._bits(self.children[v]):
                        stack.append((c, False))
            else:
                if not zmask & bit:
                    for c in self._bits(self.children[v]):
                        stack.append((c, False))
                if anz & bit:
                    for p in self._bits(self.parents[v]):
                        stack.append((p, True))
        return True


def d_separated(dag: CausalGraph, x: str, y: str, S) -> bool:
    oracle = DSeparationOracle(dag)
    index = {v: i for i, v in enumerate(oracle.nodes)}
    return oracle(index[x], index[y], [index[s] for s in S])


# ---------------------------------------------------------------------------
# CPDAGs, PC, and Meek orientation rules


@dataclass
class Cpdag:
    nodes: list[str]
    directed: set[tuple[str, str]] = field(default_factory=set)
    undirected: set[tuple[str, str]] = field(default_factory=set)

    def __post_init__(self):
        self.undirected = {tuple(sorted(e)) for e in self.undirected}
        for u, v in self.directed | self.undirected:
            if u == v:
                raise DiscoveryError(f"self-edge on {u!r}")
        for u, v in self.directed:
            if tuple(sorted((u, v))) in self.undirected:
                raise DiscoveryError(
                    f"edge ({u!r}, {v!r}) is both directed and undirected")
            if (v, u) in self.directed:
                raise DiscoveryError(
                    f"edge between {u!r} and {v!r} directed both ways")

    def same_structure(self, other: "Cpdag") -> bool:
        return (set(self.nodes) == set(other.nodes)
                and self.directed == other.directed
                and self.undirected == other.undirected)


def _meek_closure(nodes, directed: set, undirected: set):
    """Apply Meek rules R1-R3 until no undirected edge can be oriented.

    R4 is only needed under background knowledge, which PC does not use.
    """
    adjacent = {}
    for u, v in itertools.chain(directed, undirected):
        adjacent.setdefault(u, set()).add(v)
        adjacent.setdefault(v, set()).add(u)

    def adj(u, v):
        return v in adjacent.get(u, ())

    changed = True
    while changed:
        changed = False
        for a, b in sorted(undirected):
            oriented = None
            for (x, y) in ((a, b), (b, a)):
                # R1: w -> x, x - y, w and y non-adjacent  =>  x -> y
                if any(w != y and not adj(w, y)
                       for (w, t) in directed if t == x):
                    oriented = (x, y)
                    break
                # R2: x -> w -> y with x - y  =>  x -> y
                if any((x, w) in directed and (w, y) in directed
                       for w in adjacent.get(x, ())):
                    oriented = (x, y)
                    break
                # R3: x - w1 - y?, x - w2, w1 -> y, w2 -> y, w1, w2 non-adj
                ws = [w for w in adjacent.get(x, ())
                      if tuple(sorted((x, w))) in undirected
                      and (w, y) in directed]
                if any(not adj(w1, w2)
                       for w1, w2 in itertools.combinations(sorted(ws), 2)):
                    oriented = (x, y)
                    break
            if oriented is not None:
                undirected.discard(tuple(sorted(oriented)))
                directed.add(oriented)
                changed = True
    return directed, undirected


def dag_to_cpdag(dag: CausalGraph) -> Cpdag:
    """Equivalence-class representative: v-structures plus Meek closure."""
    if not is_acyclic(dag):
        raise DiscoveryError("dag_to_cpdag requires a DAG")
    directed: set[tuple[str, str]] = set()
    undirected = {tuple(sorted(e)) for e in dag.edges}
    for z in dag.nodes:
        pa = sorted(dag.parents(z))
        for x, y in itertools.combinations(pa, 2):
            if not dag.adjacent(x, y):
                directed.add((x, z))
                directed.add((y, z))
    undirected -= {tuple(sorted(e)) for e in directed}
    directed, undirected = _meek_closure(dag.nodes, directed, undirected)
    return Cpdag(nodes=list(dag.nodes), directed=directed,
                 undirected=undirected)


def pc_from_independence(nodes: list[str], indep,
                         max_cond_size: int | None = None) -> Cpdag:
    """PC given an independence callable over node indices.

    indep(i, j, S) must return True when variables i and j are judged
    independent given the tuple of conditioning indices S. Variable order
    follows the nodes list; conditioning sets are enumerated in
    lexicographic index order. Edge removals are applied between levels.
    """
    n = len(nodes)
    adjacency = {i: set(range(n)) - {i} for i in range(n)}
    sepset: dict[tuple[int, int], tuple[int, ...]] = {}

    level = 0
    while True:
        if max_cond_size is not None and level > max_cond_size:
            break
        frozen = {i: sorted(adjacency[i]) for i in range(n)}
        if all(len(frozen[i]) - 1 < level for i in range(n)):
            break
        removals = set()
        for i in range(n):
            for j in frozen[i]:
                if (min(i, j), max(i, j)) in removals:
                    continue
                pool = [k for k in frozen[i] if k != j]
                if len(pool) < level:
                    continue
                for S in itertools.combinations(pool, level):
                    if indep(i, j, S):
                        removals.add((min(i, j), max(i, j)))
                        sepset[(min(i, j), max(i, j))] = S
                        break
        for i, j in removals:
            adjacency[i].discard(j)
            adjacency[j].discard(i)
        level += 1

    directed: set[tuple[int, int]] = set()
    undirected = {(i, j) for i in range(n) for j in adjacency[i] if i < j}

    # v-structures: x - z - y with x, y non-adjacent and z outside sepset
    for z in range(n):
        neigh = sorted(adjacency[z])
        for x, y in itertools.combinations(neigh, 2):
            if y in adjacency[x]:
                continue
            if z not in sepset.get((min(x, y), max(x, y)), ()):
                for u, v in ((x, z), (y, z)):
                    if (v, u) in directed:
                        continue  # keep the first orientation on conflict
                    directed.add((u, v))
                    undirected.discard((min(u, v), max(u, v)))

    name = {i: nodes[i] for i in range(n)}
    directed_names = {(name[u], name[v]) for u, v in directed}
    undirected_names = {tuple(sorted((name[u], name[v])))
                        for u, v in undirected}
    directed_names, undirected_names = _meek_closure(
        nodes, directed_names, undirected_names)
    return Cpdag(nodes=list(nodes), directed=directed_names,
                 undirected=undirected_names)


def pc(d: BinaryDataset, kind: str = "g2", alpha: float = 0.01,
       max_cond_size: int | None = 3) -> Cpdag:
    """Constraint-based structure learning on a binary dataset."""
    if len(d.columns) < 2:
        raise DiscoveryError("pc needs at least 2 variables")
    values = d.values
    constant = [c for i, c in enumerate(d.columns)
                if np.all(values[:, i] == values[0, i])]
    if constant:
        warnings.warn(f"skipping constant column(s): {constant}")
    active = [c for c in d.columns if c not in constant]

    def indep(i, j, S):
        tables = contingency_table(d, active[i], active[j],
                                   [active[s] for s in S])
        return ci_test(tables, kind=kind, alpha=alpha).independent

    sub = pc_from_independence(active, indep, max_cond_size=max_cond_size)
    return Cpdag(nodes=list(d.columns), directed=sub.directed,
                 undirected=sub.undirected)


# ---------------------------------------------------------------------------
# Evaluation


def evaluate_graph(pred: Cpdag, truth: CausalGraph,
                   undirected_half_credit: bool = False) -> dict[str, float]:
    """SHD and directed-edge precision/recall/F1 against a true DAG.

    SHD counts node pairs whose edge state differs (missing, extra,
    reversed, or directed-vs-undirected each cost 1). Precision and recall
    use exact directed matches; optionally an undirected predicted edge
    over a true pair earns half credit.
    """
    if set(pred.nodes) != set(truth.nodes):
        raise DiscoveryError("prediction and truth have different node sets")

    def pred_state(u, v):
        if (u, v) in pred.directed:
            return ">"
        if (v, u) in pred.directed:
            return "<"
        if tuple(sorted((u, v))) in pred.undirected:
            return "-"
        return ""

    def truth_state(u, v):
        if (u, v) in truth.edges:
            return ">"
        if (v, u) in truth.edges:
            return "<"
        return ""

    shd = 0
    for u, v in itertools.combinations(sorted(truth.nodes), 2):
        if pred_state(u, v) != truth_state(u, v):
            shd += 1

    tp = len(pred.directed & truth.edges)
    n_pred = len(pred.directed)
    credit = float(tp)
    if undirected_half_credit:
        matched = sum(1 for (u, v) in pred.undirected
                      if (u, v) in truth.edges or (v, u) in truth.edges)
        credit += 0.5 * matched
        n_pred += len(pred.undirected)
    precision = credit / n_pred if n_pred else 0.0
    recall = credit / len(truth.edges) if truth.edges else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall > 0 else 0.0)
    return {"shd": float(shd), "precision": precision, "recall": recall,
            "f1": f1}


def save_cpdag(g: Cpdag, path) -> None:
    """Edge list with ``->`` for directed and ``-`` for undirected edges."""
    touched = set()
    for u, v in g.directed | g.undirected:
        touched.update((u, v))
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in sorted(g.directed):
            fh.write(f"{u}\t->\t{v}\n")
        for u, v in sorted(g.undirected):
            fh.write(f"{u}\t-\t{v}\n")
        for v in sorted(set(g.nodes) - touched):
            fh.write(f"{v}\t.\t\n")


def load_cpdag(path) -> Cpdag:
    nodes: list[str] = []
    seen = set()
    directed = set()
    undirected = set()

    def touch(*vs):
        for v in vs:
            if v and v not in seen:
                seen.add(v)
                nodes.append(v)

    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            u, marker, v = line.split("\t")
            touch(u, v)
            if marker == "->":
                directed.add((u, v))
            elif marker == "-":
                undirected.add(tuple(sorted((u, v))))
    return Cpdag(nodes=nodes, directed=directed, undirected=undirected)
