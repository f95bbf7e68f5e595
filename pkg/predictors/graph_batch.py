"""
Disjoint-union batching of featurized molecules.
"""

from dataclasses import dataclass

import numpy as np

from chemistry.molecule import BOND_ORDERS, featurize, feature_width


@dataclass(frozen=True)
class GraphBatch:
    """
    Several molecules as one graph. ``graph_index[v]`` is the molecule node
    ``v`` belongs to; edges are directed and already offset.
    """
    x: np.ndarray
    senders: np.ndarray
    receivers: np.ndarray
    edge_attr: np.ndarray
    graph_index: np.ndarray
    num_graphs: int

    @property
    def num_nodes(self):
        return self.x.shape[0]

    @classmethod
    def from_features(cls, features):
        features = list(features)
        xs, senders, receivers, edges, owners = [], [], [], [], []
        offset = 0
        for graph, item in enumerate(features):
            xs.append(item.x)
            senders.append(item.senders + offset)
            receivers.append(item.receivers + offset)
            edges.append(item.edge_attr)
            owners.append(np.full(item.num_nodes, graph, dtype=np.int64))
            offset += item.num_nodes
        width = features[0].x.shape[1] if features else 0
        return cls(
            x=np.concatenate(xs) if xs else np.zeros((0, width)),
            senders=np.concatenate(senders).astype(np.int64) if senders else np.zeros(0, np.int64),
            receivers=np.concatenate(receivers).astype(np.int64) if receivers else np.zeros(0, np.int64),
            edge_attr=np.concatenate(edges) if edges else np.zeros((0, len(BOND_ORDERS))),
            graph_index=np.concatenate(owners) if owners else np.zeros(0, np.int64),
            num_graphs=len(features),
        )

    @classmethod
    def from_molecules(cls, molecules, elements):
        if not molecules:
            empty = np.zeros(0, np.int64)
            return cls(np.zeros((0, feature_width(elements))), empty, empty,
                       np.zeros((0, len(BOND_ORDERS))), empty, 0)
        return cls.from_features(featurize(mol, elements) for mol in molecules)
