"""Relational cores: multi-head dot-product attention and PrediNet.

Both take an entity matrix of shape (batch, entities, features) whose last two
features are the entity's normalized (x, y) grid position, and return a
(batch, out_size) summary plus diagnostics.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import Linear, Module, Tensor, feature_max_pool, relu, softmax
from .numerics.layers import RELU_GAIN, uniform_fan_in
from .numerics.tensor import abs_, concat, square

ENTITY_FEATURES = 26
COMPARATORS = ("difference", "abs_difference", "sum_of_squares")


def _weight(rng, n_in, n_out, dtype) -> Tensor:
    return Tensor(uniform_fan_in(rng, (n_in, n_out), n_in, dtype), requires_grad=True)


class MHDPA(Module):
    """softmax(E Wq (E Wk)^T / sqrt(g)) E Wv per head, then a shared per-entity
    two-layer transformation and a feature-wise max pool over entities."""

    kind = "mhdpa"

    def __init__(self, rng: np.random.Generator, d_in: int = ENTITY_FEATURES, key_size: int = 64,
                 value_size: int = 64, heads: int = 4, out_size: int = ENTITY_FEATURES, dtype=np.float32):
        super().__init__()
        self.heads, self.key_size, self.value_size = heads, key_size, value_size
        self.w_query = _weight(rng, d_in, heads * key_size, dtype)
        self.w_key = _weight(rng, d_in, heads * key_size, dtype)
        self.w_value = _weight(rng, d_in, heads * value_size, dtype)
        self.mlp1 = Linear(heads * value_size, out_size, rng, dtype, gain=RELU_GAIN)
        self.mlp2 = Linear(out_size, out_size, rng, dtype)

    def _split(self, x: Tensor, size: int) -> Tensor:
        b, n, _ = x.shape
        return x.reshape(b, n, self.heads, size).transpose(0, 2, 1, 3)

    def __call__(self, entities: Tensor):
        b, n, _ = entities.shape
        q = self._split(entities @ self.w_query, self.key_size)
        k = self._split(entities @ self.w_key, self.key_size)
        v = self._split(entities @ self.w_value, self.value_size)
        scores = (q @ k.transpose(0, 1, 3, 2)) * (1.0 / np.sqrt(self.key_size))
        attention = softmax(scores, axis=-1)
        mixed = (attention @ v).transpose(0, 2, 1, 3).reshape(b, n, self.heads * self.value_size)
        per_entity = self.mlp2(relu(self.mlp1(mixed)))
        return feature_max_pool(per_entity), {"attention": attention.data}


class PrediNet(Module):
    """PrediNet with soft entity selection.

    Keys are shared across heads; each head owns two query maps computed from
    the mean entity. The two soft-selected entities of a head are embedded by
    one shared relation map and compared (vector difference by default). Each
    head emits [relations, pos(e1), pos(e2)]; the concatenation is mapped to
    ``out_size`` by two linear layers.
    """

    kind = "predinet"

    def __init__(self, rng: np.random.Generator, d_in: int = ENTITY_FEATURES, key_size: int = 64,
                 relations: int = 32, heads: int = 4, out_size: int = ENTITY_FEATURES,
                 comparator: str = "difference", dtype=np.float32):
        super().__init__()
        if comparator not in COMPARATORS:
            raise ValueError(f"unknown comparator {comparator!r}; expected one of {COMPARATORS}")
        self.heads, self.key_size, self.relations, self.comparator = heads, key_size, relations, comparator
        self.w_key = _weight(rng, d_in, key_size, dtype)
        self.w_query1 = _weight(rng, d_in, heads * key_size, dtype)
        self.w_query2 = _weight(rng, d_in, heads * key_size, dtype)
        self.w_relation = _weight(rng, d_in, relations, dtype)
        self.out1 = Linear(heads * (relations + 4), out_size, rng, dtype, gain=RELU_GAIN)
        self.out2 = Linear(out_size, out_size, rng, dtype)

    def _select(self, keys: Tensor, summary: Tensor, w_query: Tensor, entities: Tensor):
        b = summary.shape[0]
        q = (summary @ w_query).reshape(b, self.heads, self.key_size)
        scores = (q @ keys.transpose(0, 2, 1)) * (1.0 / np.sqrt(self.key_size))
        weights = softmax(scores, axis=-1)
        return weights, weights @ entities

    def __call__(self, entities: Tensor):
        b, n, d = entities.shape
        keys = entities @ self.w_key
        summary = entities.mean(axis=1, keepdims=True)
        a1, e1 = self._select(keys, summary, self.w_query1, entities)
        a2, e2 = self._select(keys, summary, self.w_query2, entities)
        if self.comparator == "difference":
            rel = (e1 - e2) @ self.w_relation
        elif self.comparator == "abs_difference":
            rel = abs_((e1 - e2) @ self.w_relation)
        else:
            rel = square(e1 @ self.w_relation) + square(e2 @ self.w_relation)
        pos1, pos2 = e1[..., d - 2:], e2[..., d - 2:]
        heads = concat([rel, pos1, pos2], axis=-1).reshape(b, self.heads * (self.relations + 4))
        out = self.out2(relu(self.out1(heads)))
        diag = {
            "relations": rel.data,
            "e1_pos": pos1.data,
            "e2_pos": pos2.data,
            "selection1": a1.data,
            "selection2": a2.data,
            "e1": e1.data,
            "e2": e2.data,
        }
        return out, diag


def switch_module(kind: str, rng: np.random.Generator, key_size: int = 64, heads: int = 4,
                  relations: int = 32, comparator: str = "difference", dtype=np.float32) -> Module:
    if kind == "mhdpa":
        return MHDPA(rng, key_size=key_size, heads=heads, dtype=dtype)
    if kind == "predinet":
        return PrediNet(rng, key_size=key_size, relations=relations, heads=heads,
                        comparator=comparator, dtype=dtype)
    raise ValueError(f"unknown relational module {kind!r}; expected 'mhdpa' or 'predinet'")


@dataclass(frozen=True)
class Relation:
    head: int
    index: int
    value: float
    e1_x: float
    e1_y: float
    e2_x: float
    e2_y: float


class RelationReport:
    """Explicit PrediNet relations for one observation, positions in grid cells."""

    HEADER = "# episode step head relation value e1_x e1_y e2_x e2_y"

    def __init__(self, relations: list[Relation]):
        self.relations = relations

    @classmethod
    def from_diagnostics(cls, diag: dict, grid_size: int, batch_index: int = 0) -> "RelationReport":
        scale = max(grid_size - 1, 1)
        rel = diag["relations"][batch_index]
        p1 = diag["e1_pos"][batch_index] * scale
        p2 = diag["e2_pos"][batch_index] * scale
        out = []
        for h in range(rel.shape[0]):
            for i in range(rel.shape[1]):
                out.append(Relation(h, i, float(rel[h, i]), float(p1[h, 0]), float(p1[h, 1]),
                                    float(p2[h, 0]), float(p2[h, 1])))
        return cls(out)

    def lines(self, episode: int, step: int) -> list[str]:
        return [
            f"{episode} {step} {r.head} {r.index} {r.value!r} {r.e1_x!r} {r.e1_y!r} {r.e2_x!r} {r.e2_y!r}"
            for r in self.relations
        ]

    @staticmethod
    def parse_line(line: str) -> tuple[int, int, Relation]:
        f = line.split()
        return int(f[0]), int(f[1]), Relation(int(f[2]), int(f[3]), *(float(v) for v in f[4:9]))
