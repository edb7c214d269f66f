"""Single-file checkpoint container for all four networks.

The recommend flow needs the relation predictor, generator, and refiner
atomically, and FID needs the classifier that produced earlier numbers, so
one versioned file holds them all plus the category table.  A content hash
over the raw parameter bytes is stored inside the payload and re-verified on
load.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import torch

from ..boxgen import LayoutGenerator
from ..core import CategoryTable, ValidationError
from ..metrics import LayoutClassifier
from ..refine import LayoutRefiner
from ..relnet import RelationPredictor

CHECKPOINT_VERSION = 1
ENV_CHECKPOINT = "NDN_CHECKPOINT"


def _hash_states(categories: CategoryTable, named_states: list[tuple[str, dict | None]]) -> str:
    digest = hashlib.sha256()
    digest.update(json.dumps(list(categories.names)).encode())
    for module_name, state in named_states:
        digest.update(module_name.encode())
        if state is None:
            continue
        for key in sorted(state):
            tensor = state[key].detach().cpu().contiguous()
            digest.update(key.encode())
            digest.update(str(tensor.dtype).encode())
            digest.update(json.dumps(list(tensor.shape)).encode())
            digest.update(tensor.numpy().tobytes())
    return digest.hexdigest()


@dataclass
class ModelCheckpoint:
    categories: CategoryTable
    relnet_config: dict
    relnet_state: dict
    boxgen_config: dict
    boxgen_state: dict
    refiner_config: dict
    refiner_state: dict
    classifier_config: dict | None = None
    classifier_state: dict | None = None
    training_config: dict | None = None
    version: int = CHECKPOINT_VERSION

    @property
    def content_hash(self) -> str:
        return _hash_states(
            self.categories,
            [
                ("relnet", self.relnet_state),
                ("boxgen", self.boxgen_state),
                ("refiner", self.refiner_state),
                ("classifier", self.classifier_state),
            ],
        )

    @classmethod
    def from_models(
        cls,
        categories: CategoryTable,
        relnet: RelationPredictor,
        boxgen: LayoutGenerator,
        refiner: LayoutRefiner,
        classifier: LayoutClassifier | None = None,
        training_config: dict | None = None,
    ) -> "ModelCheckpoint":
        return cls(
            categories=categories,
            relnet_config=relnet.config,
            relnet_state=relnet.state_dict(),
            boxgen_config=boxgen.config,
            boxgen_state=boxgen.state_dict(),
            refiner_config=refiner.config,
            refiner_state=refiner.state_dict(),
            classifier_config=classifier.config if classifier else None,
            classifier_state=classifier.state_dict() if classifier else None,
            training_config=training_config,
        )

    def save(self, path: Path | str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "version": self.version,
            "categories": list(self.categories.names),
            "relnet": {"config": self.relnet_config, "state": self.relnet_state},
            "boxgen": {"config": self.boxgen_config, "state": self.boxgen_state},
            "refiner": {"config": self.refiner_config, "state": self.refiner_state},
            "classifier": (
                {"config": self.classifier_config, "state": self.classifier_state}
                if self.classifier_state is not None
                else None
            ),
            "training_config": self.training_config,
            "content_hash": self.content_hash,
        }
        torch.save(payload, path)
        return path

    @classmethod
    def load(cls, path: Path | str) -> "ModelCheckpoint":
        path = Path(path)
        if not path.is_file():
            raise ValidationError(f"checkpoint {path} does not exist")
        payload = torch.load(path, map_location="cpu", weights_only=False)
        version = payload.get("version")
        if version != CHECKPOINT_VERSION:
            raise ValidationError(f"unsupported checkpoint version {version}")
        classifier = payload.get("classifier")
        ckpt = cls(
            categories=CategoryTable(payload["categories"]),
            relnet_config=payload["relnet"]["config"],
            relnet_state=payload["relnet"]["state"],
            boxgen_config=payload["boxgen"]["config"],
            boxgen_state=payload["boxgen"]["state"],
            refiner_config=payload["refiner"]["config"],
            refiner_state=payload["refiner"]["state"],
            classifier_config=classifier["config"] if classifier else None,
            classifier_state=classifier["state"] if classifier else None,
            training_config=payload.get("training_config"),
            version=version,
        )
        if ckpt.content_hash != payload.get("content_hash"):
            raise ValidationError(f"checkpoint {path} failed hash verification")
        return ckpt

    # -- model reconstruction ------------------------------------------------

    def build_relnet(self) -> RelationPredictor:
        model = RelationPredictor(**self.relnet_config)
        model.load_state_dict(self.relnet_state)
        model.eval()
        return model

    def build_boxgen(self) -> LayoutGenerator:
        model = LayoutGenerator(**self.boxgen_config)
        model.load_state_dict(self.boxgen_state)
        model.eval()
        return model

    def build_refiner(self) -> LayoutRefiner:
        model = LayoutRefiner(**self.refiner_config)
        model.load_state_dict(self.refiner_state)
        model.eval()
        return model

    def build_classifier(self) -> LayoutClassifier | None:
        if self.classifier_state is None:
            return None
        model = LayoutClassifier(**self.classifier_config)
        model.load_state_dict(self.classifier_state)
        model.eval()
        return model
