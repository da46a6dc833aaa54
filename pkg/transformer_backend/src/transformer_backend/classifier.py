"""Compact transformer encoder with a binary classification head.

The encoder is trained from scratch in-session over hash-bucketed code
tokens: nothing has to be downloaded, runs are seeded and CPU-friendly, and
the lexical signals that drive review labels are easily within its capacity.
The `encoder` training param names the architecture; "mini" is the only
identifier built in.
"""

from __future__ import annotations

import torch
from torch import nn

from .encoding import PAD_ID, build_input_ids

DEFAULT_PARAMS = {
    "encoder": "mini",
    "seed": 0,
    "epochs": 20,
    "learning_rate": 3e-3,
    "batch_size": 16,
    "max_len": 256,
    "d_model": 64,
    "heads": 4,
    "layers": 2,
    "ff_dim": 128,
    "vocab_size": 4096,
}


class BackendError(Exception):
    pass


class MiniEncoder(nn.Module):
    def __init__(self, vocab_size: int, d_model: int, heads: int, layers: int,
                 ff_dim: int, max_len: int):
        super().__init__()
        self.token_embedding = nn.Embedding(vocab_size, d_model, padding_idx=PAD_ID)
        self.position_embedding = nn.Embedding(max_len, d_model)
        layer = nn.TransformerEncoderLayer(
            d_model=d_model, nhead=heads, dim_feedforward=ff_dim,
            dropout=0.0, batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=layers,
                                             enable_nested_tensor=False)
        self.head = nn.Linear(d_model, 1)

    def forward(self, ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        positions = torch.arange(ids.size(1), device=ids.device).unsqueeze(0)
        x = self.token_embedding(ids) + self.position_embedding(positions)
        hidden = self.encoder(x, src_key_padding_mask=~mask)
        # masked mean pool
        counts = mask.sum(dim=1, keepdim=True).clamp(min=1)
        pooled = (hidden * mask.unsqueeze(-1)).sum(dim=1) / counts
        return self.head(pooled).squeeze(-1)


class ReviewClassifier:
    """Owns one model instance; train replaces any previous state."""

    def __init__(self):
        self.model: MiniEncoder | None = None
        self.params: dict = {}

    def _batch(self, records: list[dict]) -> tuple[torch.Tensor, torch.Tensor]:
        max_len = self.params["max_len"]
        vocab = self.params["vocab_size"]
        seqs = [build_input_ids(r, max_len, vocab) for r in records]
        width = max(len(s) for s in seqs)
        ids = torch.full((len(seqs), width), PAD_ID, dtype=torch.long)
        mask = torch.zeros((len(seqs), width), dtype=torch.bool)
        for row, seq in enumerate(seqs):
            ids[row, : len(seq)] = torch.tensor(seq, dtype=torch.long)
            mask[row, : len(seq)] = True
        return ids, mask

    def train(self, records: list[dict], params: dict) -> dict:
        if not records:
            raise BackendError("training set is empty")
        unknown = set(params) - set(DEFAULT_PARAMS)
        if unknown:
            raise BackendError(f"unknown training params: {sorted(unknown)}")
        merged = {**DEFAULT_PARAMS, **params}
        if merged["encoder"] != "mini":
            raise BackendError(
                f"unknown encoder identifier {merged['encoder']!r}; "
                "this backend builds in \"mini\" only"
            )
        labels = [r.get("label") for r in records]
        if any(y not in (0, 1) for y in labels):
            raise BackendError("every training record needs a 0/1 label")

        # Past this point the previous model is gone: a retrain that dies
        # mid-flight must not leave stale weights paired with new params.
        self.model = None
        self.params = merged
        torch.manual_seed(merged["seed"])
        torch.set_num_threads(1)
        model = MiniEncoder(
            vocab_size=merged["vocab_size"],
            d_model=merged["d_model"],
            heads=merged["heads"],
            layers=merged["layers"],
            ff_dim=merged["ff_dim"],
            max_len=merged["max_len"],
        )
        model.train()
        optimizer = torch.optim.AdamW(model.parameters(),
                                      lr=merged["learning_rate"])
        loss_fn = nn.BCEWithLogitsLoss()
        generator = torch.Generator().manual_seed(merged["seed"])
        targets = torch.tensor(labels, dtype=torch.float32)
        batch_size = merged["batch_size"]
        final_loss = 0.0
        for _ in range(merged["epochs"]):
            order = torch.randperm(len(records), generator=generator)
            epoch_loss = 0.0
            for start in range(0, len(records), batch_size):
                chunk = order[start : start + batch_size].tolist()
                ids, mask = self._batch([records[i] for i in chunk])
                optimizer.zero_grad()
                logits = model(ids, mask)
                loss = loss_fn(logits, targets[chunk])
                loss.backward()
                optimizer.step()
                epoch_loss += float(loss.detach()) * len(chunk)
            final_loss = epoch_loss / len(records)
        model.eval()
        self.model = model
        return {"trained": len(records), "final_loss": final_loss}

    def predict(self, records: list[dict]) -> list[float]:
        if self.model is None:
            raise BackendError("not trained")
        if not records:
            return []
        with torch.no_grad():
            ids, mask = self._batch(records)
            probs = torch.sigmoid(self.model(ids, mask))
        return [min(max(float(p), 0.0), 1.0) for p in probs]
