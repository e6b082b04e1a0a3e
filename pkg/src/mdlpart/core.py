"""Domain types: datasets, multi-resolution cluster hierarchies and partitions."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from .regression import RegressionModel


class StructureError(ValueError):
    """Raised when inputs are structurally inconsistent (shapes, ids, coverage)."""


class TreeError(StructureError):
    """Raised when a hierarchy fails validation; carries the violation list."""

    def __init__(self, violations: Sequence["Violation"]):
        self.violations = list(violations)
        super().__init__("; ".join(v.message for v in self.violations))


class PartitionError(StructureError):
    pass


@dataclass(frozen=True)
class Dataset:
    """Observations ``(x_i, y_i)`` stored as a dense feature matrix and target vector.

    Individuals are addressed by 0-based row index; ``ids`` keeps the external
    identifiers (if any) in row order.
    """

    features: np.ndarray
    target: np.ndarray
    column_names: tuple[str, ...] | None = None
    ids: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.array(self.features, dtype=float)
        y = np.array(self.target, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2 or y.ndim != 1:
            raise StructureError("features must be 2-D and target 1-D")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise StructureError(f"need n >= 1 and d >= 1, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise StructureError(f"features have {X.shape[0]} rows but target has {y.shape[0]}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise StructureError("dataset contains NaN or infinite entries")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "target", y)
        if self.column_names is not None:
            names = tuple(self.column_names)
            if len(names) != X.shape[1]:
                raise StructureError("column_names length does not match d")
            object.__setattr__(self, "column_names", names)
        if self.ids is not None:
            ids = tuple(self.ids)
            if len(ids) != X.shape[0]:
                raise StructureError("ids length does not match n")
            object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class Cluster:
    id: str
    layer: int
    members: np.ndarray
    parent: str | None = None
    children: tuple[str, ...] = ()

    def __post_init__(self):
        members = np.unique(np.asarray(self.members, dtype=np.int64))
        if members.size == 0:
            raise StructureError(f"cluster {self.id!r} has no members")
        if members[0] < 0:
            raise StructureError(f"cluster {self.id!r} has a negative member index")
        if self.layer < 1:
            raise StructureError(f"cluster {self.id!r} has layer {self.layer} < 1")
        members.setflags(write=False)
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "children", tuple(self.children))

    @property
    def size(self) -> int:
        return int(self.members.size)

    def digest(self) -> str:
        """SHA-1 of the sorted member indices; equal digests mean equal member sets."""
        return hashlib.sha1(self.members.astype("<i8").tobytes()).hexdigest()


@dataclass(frozen=True)
class Violation:
    kind: str  # overlap | coverage gap | broken nesting | out of range | link
    layer: int
    clusters: tuple[str, ...]
    message: str


class HierarchyTree:
    """A multi-resolution cluster set: ``n_layers`` nested partitions of ``{0..n-1}``.

    The constructor only checks record-level consistency (unique ids, links
    pointing at known clusters) so that malformed trees can still be inspected
    with :func:`validate_tree`. Use :meth:`from_labels` to build a valid tree.
    """

    def __init__(self, clusters: Iterable[Cluster], n: int):
        clusters = list(clusters)
        if not clusters:
            raise StructureError("a hierarchy needs at least one cluster")
        self.n = int(n)
        self._by_id: dict[str, Cluster] = {}
        for c in clusters:
            if c.id in self._by_id:
                raise StructureError(f"duplicate cluster id {c.id!r}")
            self._by_id[c.id] = c
        for c in clusters:
            if c.parent is not None and c.parent not in self._by_id:
                raise StructureError(f"cluster {c.id!r} names unknown parent {c.parent!r}")
            for ch in c.children:
                if ch not in self._by_id:
                    raise StructureError(f"cluster {c.id!r} names unknown child {ch!r}")
        self.n_layers = max(c.layer for c in clusters)
        self.layer_index: list[list[str]] = [[] for _ in range(self.n_layers)]
        for c in sorted(clusters, key=lambda c: (c.layer, c.id)):
            self.layer_index[c.layer - 1].append(c.id)
        self.ids: list[str] = [cid for layer in self.layer_index for cid in layer]
        self._position = {cid: i for i, cid in enumerate(self.ids)}
        self._membership: np.ndarray | None = None
        self._fingerprint: str | None = None
        self.keying = "path"

    @classmethod
    def from_labels(cls, labels, keying: str = "path", validate: bool = True) -> "HierarchyTree":
        """Build a tree from an ``n x n_layers`` table of per-layer labels.

        With ``keying="path"`` the cluster at layer ``k`` is keyed by the label
        path of layers ``1..k`` (id: path joined with ``/``), so nesting holds by
        construction. With ``keying="label"`` each layer's label is taken as a
        globally meaningful code (id: ``"<k>:<label>"``); a label reused under two
        different parents then shows up as broken nesting.
        """
        rows = [tuple(str(v) for v in row) for row in labels]
        if not rows:
            raise StructureError("no individuals")
        n_layers = len(rows[0])
        if n_layers < 1 or any(len(r) != n_layers for r in rows):
            raise StructureError("every individual needs a label at every layer")
        if keying == "path":
            def key_of(row, k):
                return "/".join(row[:k])
        elif keying == "label":
            def key_of(row, k):
                return f"{k}:{row[k - 1]}"
        else:
            raise ValueError(f"unknown keying {keying!r}")

        members: dict[str, list[int]] = {}
        layer_of: dict[str, int] = {}
        parent_votes: dict[str, dict[str, int]] = {}
        for i, row in enumerate(rows):
            prev = None
            for k in range(1, n_layers + 1):
                key = key_of(row, k)
                if layer_of.setdefault(key, k) != k:
                    raise StructureError(f"cluster id {key!r} occurs on two layers")
                members.setdefault(key, []).append(i)
                if prev is not None:
                    votes = parent_votes.setdefault(key, {})
                    votes[prev] = votes.get(prev, 0) + 1
                prev = key
        # a child reported under several parents keeps the majority one; validation flags it
        parent = {key: max(sorted(votes), key=votes.get) for key, votes in parent_votes.items()}
        children: dict[str, list[str]] = {}
        for key, p in parent.items():
            children.setdefault(p, []).append(key)
        clusters = [
            Cluster(id=key, layer=layer_of[key], members=np.asarray(idx),
                    parent=parent.get(key), children=tuple(sorted(children.get(key, ()))))
            for key, idx in members.items()
        ]
        tree = cls(clusters, n=len(rows))
        tree.keying = keying
        if validate:
            tree.check()
        return tree

    # mapping protocol
    def __getitem__(self, cid: str) -> Cluster:
        return self._by_id[cid]

    def __contains__(self, cid) -> bool:
        return cid in self._by_id

    def __iter__(self):
        return (self._by_id[cid] for cid in self.ids)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def clusters(self) -> list[Cluster]:
        return list(self)

    def position(self, cid: str) -> int:
        return self._position[cid]

    def roots(self) -> list[Cluster]:
        return [self._by_id[cid] for cid in self.layer_index[0]]

    def leaves(self) -> list[Cluster]:
        return [c for c in self if not c.children]

    def ancestors(self, cid: str) -> list[str]:
        out = []
        p = self._by_id[cid].parent
        while p is not None:
            out.append(p)
            p = self._by_id[p].parent
        return out

    def check(self, n: int | None = None) -> None:
        violations = validate_tree(self, self.n if n is None else n)
        if violations:
            raise TreeError(violations)

    @property
    def membership(self) -> np.ndarray:
        """``n x n_layers`` array; entry ``[i, k]`` is the position (into ``ids``)
        of individual ``i``'s cluster at layer ``k+1``. Valid trees only."""
        if self._membership is None:
            m = np.full((self.n, self.n_layers), -1, dtype=np.int64)
            for k, layer in enumerate(self.layer_index):
                for cid in layer:
                    m[self._by_id[cid].members, k] = self._position[cid]
            self._membership = m
        return self._membership

    def cluster_of(self, i: int, layer: int) -> str:
        return self.ids[self.membership[i, layer - 1]]

    def fingerprint(self) -> str:
        """Digest of the layered member sets; equal for isomorphic trees over the same rows."""
        if self._fingerprint is None:
            h = hashlib.sha1()
            h.update(str(self.n).encode())
            for layer in self.layer_index:
                h.update(b"|")
                for digest in sorted(self._by_id[cid].digest() for cid in layer):
                    h.update(digest.encode())
            self._fingerprint = h.hexdigest()
        return self._fingerprint


def validate_tree(tree: HierarchyTree, n: int) -> list[Violation]:
    """Check the nested-partition properties of a multi-resolution cluster set.

    Returns an empty list for a valid tree, otherwise one :class:`Violation`
    per problem found. Never raises on invalid structure.
    """
    out: list[Violation] = []
    for c in tree:
        if c.members[-1] >= n:
            out.append(Violation("out of range", c.layer, (c.id,),
                                 f"cluster {c.id} has member index >= n={n}"))
        if c.parent is not None and c.id not in tree[c.parent].children:
            out.append(Violation("link", c.layer, (c.parent, c.id),
                                 f"cluster {c.id} names parent {c.parent} which does not list it"))
        for ch in c.children:
            if tree[ch].parent != c.id or tree[ch].layer != c.layer + 1:
                out.append(Violation("link", c.layer, (c.id, ch),
                                     f"child link {c.id} -> {ch} is inconsistent"))
    if out:
        return out

    for k, layer in enumerate(tree.layer_index, start=1):
        owner = np.full(n, -1, dtype=np.int64)
        for pos, cid in enumerate(layer):
            members = tree[cid].members
            clash = owner[members]
            hit = np.unique(clash[clash >= 0])
            for other in hit:
                shared = members[clash == other]
                out.append(Violation(
                    "overlap", k, (layer[other], cid),
                    f"overlap at layer {k}: {layer[other]} and {cid} share "
                    f"{shared.size} individual(s), e.g. {int(shared[0])}"))
            owner[members] = pos
        gap = np.flatnonzero(owner < 0)
        if gap.size:
            out.append(Violation("coverage gap", k, (),
                                 f"coverage gap at layer {k}: {gap.size} individual(s) "
                                 f"unassigned, e.g. {int(gap[0])}"))
        if k > 1:
            for cid in layer:
                c = tree[cid]
                parent_members = tree[c.parent].members if c.parent is not None else None
                if parent_members is None or not np.all(np.isin(c.members, parent_members)):
                    holders = _layer_holders(tree, tree.layer_index[k - 2], c.members)
                    out.append(Violation(
                        "broken nesting", k, (cid, *holders),
                        f"broken nesting: layer-{k} cluster {cid} is not contained in a single "
                        f"layer-{k - 1} cluster (spans {', '.join(holders) or 'none'})"))
    for c in tree:
        if c.children:
            union = np.concatenate([tree[ch].members for ch in c.children])
            if union.size != c.size or not np.array_equal(np.sort(union), c.members):
                out.append(Violation("broken nesting", c.layer, (c.id, *c.children),
                                     f"broken nesting: children of {c.id} do not exactly cover it"))
    return out


def _layer_holders(tree: HierarchyTree, layer: list[str], members: np.ndarray) -> tuple[str, ...]:
    return tuple(cid for cid in layer if np.intersect1d(tree[cid].members, members).size)


def restrict(dataset: Dataset, cluster: Cluster | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rows of ``dataset`` belonging to ``cluster``, in member order."""
    idx = cluster.members if isinstance(cluster, Cluster) else np.asarray(cluster, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= dataset.n):
        raise StructureError(f"member index out of range for dataset with n={dataset.n}")
    return dataset.features[idx], dataset.target[idx]


class Partition:
    """A set of tree clusters that are pairwise disjoint and cover every individual."""

    def __init__(self, tree: HierarchyTree, cluster_ids: Iterable[str]):
        ids = frozenset(cluster_ids)
        unknown = sorted(cid for cid in ids if cid not in tree)
        if unknown:
            raise PartitionError(f"unknown cluster ids: {unknown}")
        if not ids:
            raise PartitionError("a partition needs at least one cluster")
        count = np.zeros(tree.n, dtype=np.int64)
        for cid in ids:
            count[tree[cid].members] += 1
        if np.any(count > 1):
            raise PartitionError(f"clusters overlap on {int(np.sum(count > 1))} individual(s)")
        if np.any(count == 0):
            raise PartitionError(f"{int(np.sum(count == 0))} individual(s) are not covered")
        self.tree = tree
        self.cluster_ids = ids

    def __iter__(self):
        return (cid for cid in self.tree.ids if cid in self.cluster_ids)

    def __len__(self) -> int:
        return len(self.cluster_ids)

    def __contains__(self, cid) -> bool:
        return cid in self.cluster_ids

    def __eq__(self, other) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self.cluster_ids == other.cluster_ids and (
            self.tree is other.tree or self.tree.fingerprint() == other.tree.fingerprint())

    def __hash__(self) -> int:
        return hash(self.cluster_ids)

    def __repr__(self) -> str:
        return f"Partition({sorted(self.cluster_ids)})"

    def assignment(self) -> np.ndarray:
        """Position (into ``tree.ids``) of each individual's selected cluster."""
        out = np.empty(self.tree.n, dtype=np.int64)
        for cid in self.cluster_ids:
            out[self.tree[cid].members] = self.tree.position(cid)
        return out


@dataclass
class InferenceReport:
    """Output of a partition search.

    ``models`` holds the linear-class fit of every cluster, ``optimal_models``
    the MDL-preferred model of each selected cluster. ``eta`` only contains the
    clusters for which homogeneity was evaluated.
    """

    algorithm: str
    partition: Partition
    models: dict[str, "RegressionModel"]
    optimal_models: dict[str, "RegressionModel"]
    eta: dict[str, float]
    model_irr: dict[str, float]
    cluster_irr: dict[str, float]
    gamma_used: float
    gamma_prime: float
    kind: str = "linear"
    seed: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def tree(self) -> HierarchyTree:
        return self.partition.tree

