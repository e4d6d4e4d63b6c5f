"""Hash-based and multilevel graph partitioning of encoded triples."""

import heapq
import logging
import math
import random
from collections.abc import Iterable, Sequence

import numpy as np

from part_bench.config import COARSENING_FLOOR, COARSENING_PER_PART
from part_bench.errors import InfeasibleBalanceError, UnmappedSubjectError
from part_bench.graph_prep import PartitionMap, UndirectedGraph, edge_cut
from part_bench.models import EncodedTriple, PartitionedDataset, StrategyConfig

logger = logging.getLogger(__name__)

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN64 = 0x9E3779B97F4A7C15
MIX_MUL_1 = 0xBF58476D1CE4E5B9
MIX_MUL_2 = 0x94D049BB133111EB

# Stop coarsening when a level shrinks the graph by less than this factor.
COARSENING_MIN_SHRINK = 0.95


def mix64(x: int) -> int:
    """SplitMix64 finalizer: a 64-bit avalanche mixer."""
    x = ((x ^ (x >> 30)) * MIX_MUL_1) & MASK64
    x = ((x ^ (x >> 27)) * MIX_MUL_2) & MASK64
    return x ^ (x >> 31)


def hash_ids(ids: Iterable[int], seed: int) -> int:
    """
    Seeded 64-bit hash of an ordered id tuple.

    h starts at the seed; for each id, h = mix64(((h XOR id) + GOLDEN64) mod 2^64).
    """
    h = seed & MASK64
    for value in ids:
        h = mix64(((h ^ value) + GOLDEN64) & MASK64)
    return h


def _mix64_array(x: np.ndarray) -> np.ndarray:
    x = (x ^ (x >> np.uint64(30))) * np.uint64(MIX_MUL_1)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(MIX_MUL_2)
    return x ^ (x >> np.uint64(31))


def hash_columns(columns: Sequence[np.ndarray], seed: int) -> np.ndarray:
    """Vectorized hash_ids over equally sized uint64 columns."""
    h = np.full(len(columns[0]), seed & MASK64, dtype=np.uint64)
    for column in columns:
        h = _mix64_array((h ^ column.astype(np.uint64, copy=False)) + np.uint64(GOLDEN64))
    return h


def hash_random(triple: EncodedTriple, config: StrategyConfig) -> int:
    """Partition of a triple keyed on the whole (s, p, o) tuple."""
    return hash_ids(triple, config.seed) % config.k


def hash_subject(triple: EncodedTriple, config: StrategyConfig) -> int:
    """Partition of a triple keyed on its subject."""
    return hash_ids((triple.s,), config.seed) % config.k


def _as_array(triples: Sequence[EncodedTriple]) -> np.ndarray:
    return np.asarray(triples, dtype=np.uint64).reshape(-1, 3)


def assign_random_hash(triples: Sequence[EncodedTriple] | np.ndarray, config: StrategyConfig) -> np.ndarray:
    """Vectorized hash_random over many triples."""
    array = triples if isinstance(triples, np.ndarray) else _as_array(triples)
    hashed = hash_columns([array[:, 0], array[:, 1], array[:, 2]], config.seed)
    return (hashed % np.uint64(config.k)).astype(np.int64)


def assign_subject_hash(triples: Sequence[EncodedTriple] | np.ndarray, config: StrategyConfig) -> np.ndarray:
    """Vectorized hash_subject over many triples."""
    array = triples if isinstance(triples, np.ndarray) else _as_array(triples)
    hashed = hash_columns([array[:, 0]], config.seed)
    return (hashed % np.uint64(config.k)).astype(np.int64)


def subject_hash_map(num_nodes: int, config: StrategyConfig) -> PartitionMap:
    """PartitionMap sending each node to the partition its subject hash selects."""
    nodes = np.arange(num_nodes, dtype=np.uint64)
    hashed = hash_columns([nodes], config.seed)
    return PartitionMap((hashed % np.uint64(config.k)).astype(np.int64).tolist(), config.k)


def allocate_by_hash(triples: Sequence[EncodedTriple], config: StrategyConfig, by_subject: bool) -> PartitionedDataset:
    """Place every triple as Original in its hash partition."""
    assign = assign_subject_hash if by_subject else assign_random_hash
    partitions = assign(triples, config).tolist() if triples else []

    dataset = PartitionedDataset(config.k)
    for triple, partition in zip(triples, partitions, strict=True):
        dataset.add_original(triple, partition)

    key = "subject" if by_subject else "triple"
    logger.info("Hash-allocated %d triples into %d partitions (key=%s)", len(triples), config.k, key)
    return dataset


def allocate_by_subject(triples: Iterable[EncodedTriple], partition_map: PartitionMap) -> PartitionedDataset:
    """
    Allocate each triple, as Original, to the partition of its subject.

    Raises:
        UnmappedSubjectError: If a subject has no entry in the partition map
    """
    dataset = PartitionedDataset(partition_map.k)
    for triple in triples:
        partition = partition_map.get(triple.s)
        if partition is None:
            raise UnmappedSubjectError(triple.s)
        dataset.add_original(triple, partition)
    return dataset


class _Level:
    """One graph of the coarsening hierarchy: weighted adjacency and vertex weights."""

    def __init__(self, adjacency: list[dict[int, int]], weights: list[int], fine_to_coarse: list[int] | None = None):
        self.adjacency = adjacency
        self.weights = weights
        # Maps vertices of the next finer level onto this level's vertices.
        self.fine_to_coarse = fine_to_coarse

    @property
    def n(self) -> int:
        return len(self.adjacency)


def _coarsen(level: _Level, rng: random.Random, max_weight: int) -> _Level:
    """Contract a max-degree-first heavy-edge matching into a coarser level."""
    n = level.n
    adjacency, weights = level.adjacency, level.weights

    rank = list(range(n))
    rng.shuffle(rank)
    order = sorted(range(n), key=lambda v: (-len(adjacency[v]), rank[v]))

    match = [-1] * n
    for u in order:
        if match[u] != -1:
            continue
        best, best_weight = -1, 0
        for v, w in adjacency[u].items():
            if match[v] != -1 or weights[u] + weights[v] > max_weight:
                continue
            if w > best_weight or (w == best_weight and v < best):
                best, best_weight = v, w
        if best == -1:
            match[u] = u
        else:
            match[u] = best
            match[best] = u

    fine_to_coarse = [-1] * n
    coarse_count = 0
    for u in range(n):
        if fine_to_coarse[u] == -1:
            fine_to_coarse[u] = coarse_count
            fine_to_coarse[match[u]] = coarse_count
            coarse_count += 1

    coarse_adjacency: list[dict[int, int]] = [{} for _ in range(coarse_count)]
    coarse_weights = [0] * coarse_count
    for u in range(n):
        cu = fine_to_coarse[u]
        coarse_weights[cu] += weights[u]
        row = coarse_adjacency[cu]
        for v, w in adjacency[u].items():
            cv = fine_to_coarse[v]
            if cu != cv:
                row[cv] = row.get(cv, 0) + w

    return _Level(coarse_adjacency, coarse_weights, fine_to_coarse)


def _initial_partition(level: _Level, k: int, cap: float) -> list[int]:
    """Greedy graph growing: fill partitions 0..k-2 from the most connected frontier vertex."""
    n = level.n
    adjacency, weights = level.adjacency, level.weights
    part = [-1] * n
    remaining = sum(weights)
    next_seed = 0

    for p in range(k - 1):
        target = math.ceil(remaining / (k - p))
        load = 0
        connectivity: dict[int, int] = {}
        frontier: list[tuple[int, int]] = []

        while load < target:
            vertex = -1
            while frontier:
                neg_conn, candidate = heapq.heappop(frontier)
                if part[candidate] == -1 and -neg_conn == connectivity.get(candidate):
                    vertex = candidate
                    break
            if vertex == -1:
                while next_seed < n and part[next_seed] != -1:
                    next_seed += 1
                if next_seed == n:
                    break
                vertex = next_seed
            if load > 0 and load + weights[vertex] > cap:
                connectivity.pop(vertex, None)
                if not frontier:
                    break
                continue

            part[vertex] = p
            load += weights[vertex]
            for neighbor, w in adjacency[vertex].items():
                if part[neighbor] == -1:
                    connectivity[neighbor] = connectivity.get(neighbor, 0) + w
                    heapq.heappush(frontier, (-connectivity[neighbor], neighbor))

        remaining -= load

    for v in range(n):
        if part[v] == -1:
            part[v] = k - 1
    return part


def _connectivity(adjacency: dict[int, int], part: list[int]) -> dict[int, int]:
    conn: dict[int, int] = {}
    for u, w in adjacency.items():
        conn[part[u]] = conn.get(part[u], 0) + w
    return conn


def _refine(level: _Level, part: list[int], k: int, cap: float) -> int:
    """One greedy pass moving boundary vertices to the neighbor partition with the best positive gain."""
    adjacency, weights = level.adjacency, level.weights
    loads = [0] * k
    for v, p in enumerate(part):
        loads[p] += weights[v]

    moves = 0
    for v in range(level.n):
        p = part[v]
        conn = _connectivity(adjacency[v], part)
        if len(conn) <= 1 and p in conn:
            continue
        internal = conn.get(p, 0)
        best, best_gain = -1, 0
        for q in sorted(conn):
            if q == p or loads[q] + weights[v] > cap:
                continue
            gain = conn[q] - internal
            if gain > best_gain:
                best, best_gain = q, gain
        if best != -1:
            part[v] = best
            loads[p] -= weights[v]
            loads[best] += weights[v]
            moves += 1
    return moves


def _rebalance(level: _Level, part: list[int], k: int, cap: int) -> int:
    """Move vertices out of overweight partitions into the best-connected partition with room."""
    loads = [0] * k
    members: list[list[int]] = [[] for _ in range(k)]
    for v, p in enumerate(part):
        loads[p] += level.weights[v]
        members[p].append(v)

    moves = 0
    for p in range(k):
        if loads[p] <= cap:
            continue

        def best_target(v: int, source: int = p) -> tuple[int, int]:
            conn = _connectivity(level.adjacency[v], part)
            rooms = [q for q in range(k) if q != source and loads[q] + level.weights[v] <= cap]
            if not rooms:
                return -1, 0
            target = max(rooms, key=lambda q: (conn.get(q, 0), -q))
            return target, conn.get(target, 0) - conn.get(source, 0)

        candidates = sorted(members[p], key=lambda v: (-best_target(v)[1], v))
        for v in candidates:
            if loads[p] <= cap:
                break
            target, _ = best_target(v)
            if target == -1:
                continue
            part[v] = target
            loads[p] -= level.weights[v]
            loads[target] += level.weights[v]
            moves += 1
    return moves


def multilevel_partition(graph: UndirectedGraph, config: StrategyConfig) -> PartitionMap:
    """
    Min edge-cut k-way partitioning: coarsen, partition the coarsest graph, uncoarsen with refinement.

    Args:
        graph: Undirected graph to partition
        config: Supplies k, the balance tolerance epsilon and the seed

    Returns:
        Total PartitionMap with every partition holding at most (1+epsilon)*ceil(n/k) vertices

    Raises:
        InfeasibleBalanceError: If k exceeds the number of vertices
    """
    n, k = graph.n, config.k
    if k == 1:
        return PartitionMap([0] * n, 1)
    if k > n:
        raise InfeasibleBalanceError(f"Cannot split {n} vertices into {k} partitions")

    rng = random.Random(config.seed)
    finest = _Level([dict.fromkeys(neighbors, 1) for neighbors in graph.adjacency], [1] * n)
    levels = [finest]

    coarsening_target = max(COARSENING_FLOOR, COARSENING_PER_PART * k)
    max_weight = max(1, math.ceil(1.5 * n / coarsening_target))
    while levels[-1].n > coarsening_target:
        coarser = _coarsen(levels[-1], rng, max_weight)
        if coarser.n > COARSENING_MIN_SHRINK * levels[-1].n:
            break
        levels.append(coarser)
    logger.debug("Coarsened %d vertices through %d level(s) to %d", n, len(levels) - 1, levels[-1].n)

    cap = (1 + config.epsilon) * math.ceil(n / k)
    part = _initial_partition(levels[-1], k, cap)
    _refine(levels[-1], part, k, cap)

    for depth in range(len(levels) - 1, 0, -1):
        mapping = levels[depth].fine_to_coarse
        part = [part[c] for c in mapping]
        finer = levels[depth - 1]
        if depth == 1:
            _rebalance(finer, part, k, math.floor(cap))
        _refine(finer, part, k, cap)

    if len(levels) == 1:
        _rebalance(finest, part, k, math.floor(cap))
        _refine(finest, part, k, cap)

    partition_map = PartitionMap(part, k)
    cut = edge_cut(graph, partition_map)
    logger.info("Multilevel partition: k=%d, sizes=%s, cut=%d", k, partition_map.sizes(), cut)
    return partition_map
