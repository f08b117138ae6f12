"""Model zoo declarations and training."""

import logging
from concurrent.futures import ThreadPoolExecutor

from pydantic import BaseModel, ConfigDict, Field

from flatattack.errors import ConfigError
from flatattack.models.dataset import Dataset
from flatattack.models.mlp import Activation, MlpClassifier
from flatattack.models.training import TrainConfig, accuracy, train
from flatattack.numerics import SeededRng

logger = logging.getLogger(__name__)


class ModelSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    id: str = Field(min_length=1, max_length=255)
    hidden: tuple[int, ...] = ()
    activation: Activation = Activation.TANH


# Width, depth and activation vary so decision boundaries differ between members.
DEFAULT_ZOO: tuple[ModelSpec, ...] = (
    ModelSpec(id="m0", hidden=(64,), activation=Activation.TANH),
    ModelSpec(id="m1", hidden=(32, 32), activation=Activation.SOFTPLUS),
    ModelSpec(id="m2", hidden=(128,), activation=Activation.RELU),
    ModelSpec(id="m3", hidden=(), activation=Activation.TANH),
)


def build_zoo(
    specs: tuple[ModelSpec, ...] | list[ModelSpec],
    dataset: Dataset,
    train_cfg: TrainConfig,
    threads: int = 1,
) -> dict[str, MlpClassifier]:
    """Initialize and train every declared model on the training split.

    Model i draws its initial weights from stream (init_seed, i).spawn(0) and
    its batch order from (init_seed, i).spawn(1), so results do not depend on
    ``threads``.

    Raises:
        ConfigError: If two specs share an id.
    """
    ids = [s.id for s in specs]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"duplicate model ids in zoo: {ids}", key="zoo")
    train_split = dataset.train_split()
    test_split = dataset.test_split()

    def build(index: int) -> MlpClassifier:
        spec = specs[index]
        stream = SeededRng(train_cfg.init_seed, stream_id=index)
        model = MlpClassifier.initialize(
            input_dim=dataset.input_dim,
            num_classes=dataset.num_classes,
            hidden=spec.hidden,
            activation=spec.activation,
            model_id=spec.id,
            rng=stream.spawn(0),
        )
        trained = train(model, train_split, train_cfg, stream.spawn(1))
        logger.info(
            "%s (%s, hidden=%s): test accuracy %.4f",
            spec.id,
            spec.activation.value,
            list(spec.hidden),
            accuracy(trained, test_split),
        )
        return trained

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            models = list(pool.map(build, range(len(specs))))
    else:
        models = [build(i) for i in range(len(specs))]
    return {m.model_id: m for m in models}
