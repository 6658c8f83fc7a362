"""Rooted unweighted trees with the bookkeeping the game engine needs.

Node ids are dense integers ``0 .. node_count - 1``. Builders emit them in
BFS order from the root (so a parent id is always smaller than its children
and the children of a node occupy a contiguous id range); trees loaded from a
parent-array document keep whatever dense labelling the document used.

Every tree carries precomputed per-node ``depth`` (edges from the root),
``level`` (height of the subtree rooted there; leaves have level 0) and
``subtree_leaves`` (number of leaves in the subtree). Distances are computed
on demand by walking the two nodes up to their lowest common ancestor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

# Hard ceiling on accepted tree sizes. Builders and the document loader
# refuse anything larger so a typo in k cannot allocate tens of gigabytes.
DEFAULT_NODE_CAP = 20_000_000


class TreeError(ValueError):
    """Base class for tree construction and validation failures."""


class TreeFormatError(TreeError):
    """The document could not be parsed into a parent array."""


class TreeInvariantError(TreeError):
    """The parent array does not describe a single rooted tree."""


class TreeSizeError(TreeError):
    """The requested tree exceeds the node-count cap."""


@dataclass(frozen=True, eq=False)
class Tree:
    """Immutable rooted tree over dense node ids.

    Attributes
    ----------
    parent:
        int64 array, ``parent[root] == -1``.
    child_offsets, children_flat:
        CSR layout; children of ``u`` are
        ``children_flat[child_offsets[u]:child_offsets[u + 1]]``, ordered by
        ascending id.
    depth, level, subtree_leaves:
        int64 arrays as described in the module docstring.
    """

    parent: np.ndarray
    child_offsets: np.ndarray
    children_flat: np.ndarray
    depth: np.ndarray
    level: np.ndarray
    subtree_leaves: np.ndarray
    root: int
    bfs_order: np.ndarray = field(repr=False)

    @property
    def node_count(self) -> int:
        return int(self.parent.shape[0])

    @property
    def height(self) -> int:
        return int(self.level[self.root])

    @property
    def leaf_count(self) -> int:
        return int(self.subtree_leaves[self.root])

    def children(self, u: int) -> np.ndarray:
        return self.children_flat[self.child_offsets[u]:self.child_offsets[u + 1]]

    def is_leaf(self, u: int) -> bool:
        return self.child_offsets[u + 1] == self.child_offsets[u]

    def leaves(self) -> np.ndarray:
        offs = self.child_offsets
        return np.nonzero(offs[1:] == offs[:-1])[0].astype(np.int64)

    def __repr__(self) -> str:  # keep array spam out of test failure output
        return (f"Tree(nodes={self.node_count}, height={self.height}, "
                f"leaves={self.leaf_count}, root={self.root})")


def from_parents(parents, node_cap: int = DEFAULT_NODE_CAP) -> Tree:
    """Build and validate a :class:`Tree` from a parent array.

    ``parents[u]`` is the parent id of ``u``, with ``-1`` marking the root.
    Raises :class:`TreeInvariantError` unless the array describes exactly one
    connected, acyclic rooted tree, and :class:`TreeSizeError` past the cap.
    """
    parent = np.asarray(parents, dtype=np.int64)
    if parent.ndim != 1 or parent.shape[0] == 0:
        raise TreeInvariantError("parent array must be one-dimensional and non-empty")
    n = int(parent.shape[0])
    if n > node_cap:
        raise TreeSizeError(
            f"tree has {n} nodes which exceeds the node-count cap of {node_cap}")

    roots = np.nonzero(parent == -1)[0]
    if roots.shape[0] != 1:
        raise TreeInvariantError(
            f"expected exactly one root (parent -1), found {roots.shape[0]}")
    root = int(roots[0])
    bad = np.nonzero((parent < -1) | (parent >= n))[0]
    if bad.shape[0]:
        raise TreeInvariantError(
            f"node {int(bad[0])} has parent {int(parent[bad[0]])} outside 0..{n - 1}")
    if bool((parent == np.arange(n, dtype=np.int64)).any()):
        raise TreeInvariantError("a node lists itself as parent")

    # CSR children, ordered by child id.
    counts = np.bincount(parent[parent >= 0], minlength=n)
    child_offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=child_offsets[1:])
    children_flat = np.empty(n - 1, dtype=np.int64) if n > 1 else np.empty(0, dtype=np.int64)
    cursor = child_offsets[:-1].copy()
    order_ids = np.arange(n, dtype=np.int64)
    mask = parent >= 0
    kids = order_ids[mask]
    pars = parent[mask]
    sort = np.argsort(kids, kind="stable")  # ascending child id within parent
    for c, p in zip(kids[sort], pars[sort]):
        children_flat[cursor[p]] = c
        cursor[p] += 1

    # BFS from the root; visiting all n nodes certifies connectivity and
    # acyclicity in one pass.
    bfs = np.empty(n, dtype=np.int64)
    bfs[0] = root
    depth = np.full(n, -1, dtype=np.int64)
    depth[root] = 0
    head, tail = 0, 1
    while head < tail:
        u = bfs[head]
        head += 1
        cs = children_flat[child_offsets[u]:child_offsets[u + 1]]
        for c in cs:
            depth[c] = depth[u] + 1
            bfs[tail] = c
            tail += 1
    if tail != n:
        raise TreeInvariantError(
            f"parent array is not a single tree: reached {tail} of {n} nodes from the root")

    # Bottom-up passes in reverse BFS order.
    level = np.zeros(n, dtype=np.int64)
    subtree_leaves = np.zeros(n, dtype=np.int64)
    leaf_mask = counts == 0
    subtree_leaves[leaf_mask] = 1
    for i in range(n - 1, 0, -1):
        u = bfs[i]
        p = parent[u]
        subtree_leaves[p] += subtree_leaves[u]
        if level[u] + 1 > level[p]:
            level[p] = level[u] + 1

    for arr in (parent, child_offsets, children_flat, depth, level, subtree_leaves, bfs):
        arr.flags.writeable = False
    return Tree(parent=parent, child_offsets=child_offsets, children_flat=children_flat,
                depth=depth, level=level, subtree_leaves=subtree_leaves, root=root,
                bfs_order=bfs)


def build_factorial_tree(k: int, node_cap: int = DEFAULT_NODE_CAP) -> Tree:
    """Height-``k`` tree where a node at level ``d`` has exactly ``d`` children.

    The root sits at level ``k``; level-0 nodes are the leaves, of which there
    are ``k!``. Node count follows ``T(d) = 1 + d * T(d - 1)``, ``T(0) = 1``.
    """
    if k < 1:
        raise TreeError("factorial tree needs k >= 1")
    sizes = [1]
    for d in range(1, k + 1):
        sizes.append(1 + d * sizes[-1])
    n = sizes[k]
    if n > node_cap:
        raise TreeSizeError(
            f"factorial tree with k={k} has {n} nodes which exceeds the "
            f"node-count cap of {node_cap}")

    parent = np.empty(n, dtype=np.int64)
    parent[0] = -1
    node_level = np.empty(n, dtype=np.int64)
    node_level[0] = k
    next_id = 1
    for u in range(n):
        d = node_level[u]
        for _ in range(d):
            parent[next_id] = u
            node_level[next_id] = d - 1
            next_id += 1
    assert next_id == n
    return from_parents(parent, node_cap=node_cap)


def build_complete_kary_tree(branching: int, height: int,
                             node_cap: int = DEFAULT_NODE_CAP) -> Tree:
    """Complete tree: every internal node has ``branching`` children and all
    leaves sit at depth ``height``."""
    if branching < 1:
        raise TreeError("branching factor must be >= 1")
    if height < 0:
        raise TreeError("height must be >= 0")
    layer_sizes = [branching ** d for d in range(height + 1)]
    n = sum(layer_sizes)
    if n > node_cap:
        raise TreeSizeError(
            f"complete {branching}-ary tree of height {height} has {n} nodes "
            f"which exceeds the node-count cap of {node_cap}")
    parent = np.empty(n, dtype=np.int64)
    parent[0] = -1
    # BFS ids: layer d starts at sum(layer_sizes[:d]).
    start = 1
    prev_start = 0
    for d in range(1, height + 1):
        size = layer_sizes[d]
        idx = np.arange(size, dtype=np.int64)
        parent[start:start + size] = prev_start + idx // branching
        prev_start = start
        start += size
    return from_parents(parent, node_cap=node_cap)


def build_path_tree(length: int, node_cap: int = DEFAULT_NODE_CAP) -> Tree:
    """Path of ``length`` edges: root at one end, single leaf at the other."""
    return build_complete_kary_tree(1, length, node_cap=node_cap)


def dist(t: Tree, u: int, w: int) -> int:
    """Edge distance between ``u`` and ``w`` (walk both up to the LCA)."""
    du, dw = int(t.depth[u]), int(t.depth[w])
    a, b = int(u), int(w)
    steps = 0
    while du > dw:
        a = int(t.parent[a])
        du -= 1
        steps += 1
    while dw > du:
        b = int(t.parent[b])
        dw -= 1
        steps += 1
    while a != b:
        a = int(t.parent[a])
        b = int(t.parent[b])
        steps += 2
    return steps


def preorder(t: Tree) -> np.ndarray:
    """Depth-first preorder of node ids, children visited in id order."""
    n = t.node_count
    out = np.empty(n, dtype=np.int64)
    stack = [t.root]
    i = 0
    while stack:
        u = stack.pop()
        out[i] = u
        i += 1
        cs = t.children(u)
        # push reversed so the lowest-id child is visited first
        for j in range(len(cs) - 1, -1, -1):
            stack.append(int(cs[j]))
    return out


def is_factorial_tree(t: Tree) -> bool:
    """True when every node at level d has exactly d children."""
    n_children = np.diff(t.child_offsets)
    return bool((n_children == t.level).all())


def is_complete_kary_tree(t: Tree) -> bool:
    """True when all internal nodes share one branching factor and all leaves
    share one depth."""
    n_children = np.diff(t.child_offsets)
    internal = n_children > 0
    if not internal.any():
        return True  # single node
    b = n_children[internal]
    if not bool((b == b[0]).all()):
        return False
    leaf_depths = t.depth[~internal]
    return bool((leaf_depths == leaf_depths[0]).all())


def parse_tree_document(doc: dict, node_cap: int = DEFAULT_NODE_CAP) -> Tree:
    """Parse the on-disk tree document: ``{"nodes": n, "parents": [...]}``."""
    if not isinstance(doc, dict):
        raise TreeFormatError("tree document must be a JSON object")
    try:
        n = doc["nodes"]
        parents = doc["parents"]
    except KeyError as exc:
        raise TreeFormatError(f"tree document is missing field {exc.args[0]!r}") from exc
    if not isinstance(n, int) or isinstance(n, bool):
        raise TreeFormatError("field 'nodes' must be an integer")
    if not isinstance(parents, list):
        raise TreeFormatError("field 'parents' must be an array")
    if len(parents) != n:
        raise TreeFormatError(
            f"field 'nodes' says {n} but 'parents' has {len(parents)} entries")
    for v in parents:
        if not isinstance(v, int) or isinstance(v, bool):
            raise TreeFormatError("'parents' entries must be integers")
    return from_parents(parents, node_cap=node_cap)


def tree_to_document(t: Tree) -> dict:
    return {"nodes": t.node_count, "parents": [int(p) for p in t.parent]}


def load_tree(path, node_cap: int = DEFAULT_NODE_CAP) -> Tree:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise TreeFormatError(f"tree file is not valid JSON: {exc}") from exc
    return parse_tree_document(doc, node_cap=node_cap)


def save_tree(t: Tree, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(tree_to_document(t), fh)
        fh.write("\n")
