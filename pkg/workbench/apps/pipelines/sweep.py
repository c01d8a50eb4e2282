"""Hidden-node study: held-out error as a function of LSTM width."""

import logging
from typing import Sequence

from apps.core.exceptions import ConfigError
from apps.datasets.sequences import SequenceDataset
from apps.metrics.stats import EvalReport

from .lstm import evaluate_lstm, train_lstm
from .schemas import LstmPipelineConfig

logger = logging.getLogger(__name__)


def sweep_hidden(
    cfg: LstmPipelineConfig,
    train: SequenceDataset,
    test: SequenceDataset,
    hidden_sizes: Sequence[int],
    seeds: Sequence[int],
) -> dict[int, dict[int, EvalReport]]:
    """
    Train one model per (hidden size, seed) and evaluate it on ``test``.

    Returns:
        ``reports[hidden][seed]``; each report carries its training history
    """
    if not hidden_sizes or not seeds:
        raise ConfigError("sweep needs at least one hidden size and one seed")
    reports: dict[int, dict[int, EvalReport]] = {}
    for hidden in hidden_sizes:
        reports[hidden] = {}
        for seed in seeds:
            run_cfg = cfg.model_copy(update={"hidden": hidden, "seed": seed})
            model, history = train_lstm(run_cfg, train, test)
            report = evaluate_lstm(model, test, per_epoch=history)
            reports[hidden][seed] = report
            logger.info(
                "Sweep run finished",
                extra={
                    "extra": {
                        "hidden": hidden,
                        "seed": seed,
                        "mean_err_m": report.mean_err_m,
                        "max_err_m": report.max_err_m,
                    }
                },
            )
    return reports
