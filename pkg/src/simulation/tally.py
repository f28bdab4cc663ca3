"""
Detection tallies from the click model.
Expected-value tallies and category-level sampled tallies for a user pair.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from src.core.decoy import sent_label_counts, window_probabilities
from src.core.params import ProtocolParams
from src.detection.detector import (
    ChannelSpec,
    PhaseFilter,
    click_probabilities,
    residual_phase_nodes,
)
from src.detection.events import (
    DEFAULT_INGESTION_MAP,
    SIGNAL_LABELS,
    TABLE2_LABELS,
    DetectionTally,
    aggregate_labels,
)

logger = logging.getLogger(__name__)

XX_LABEL = 'XXxx'


@dataclass(frozen=True)
class DecoyFilterResponse:
    """Response of XXxx pairings split by the phase filter."""
    pass_fraction: float
    accept_given_pass: float
    correct_given_pass: float
    response_given_fail: float


def label_intensities(params: ProtocolParams, label: str) -> tuple:
    """Intensities (mu_i, mu_j) sent under an "ijab" label."""
    return params.intensity(label[2]), params.intensity(label[3])


def _response_grid(mu_i: float, mu_j: float, ch: ChannelSpec, filt: PhaseFilter) -> tuple:
    """
    Per slice difference: probability of a D0-only and of a D1-only click,
    averaged over the residual phase noise.
    """
    nodes, weights = residual_phase_nodes(ch.residual_phase_std)
    delta = filt.difference_grid()[:, None] + nodes[None, :]
    p_d0, p_d1 = click_probabilities(mu_i, mu_j, delta, ch)
    only_d0 = (p_d0 * (1 - p_d1)) @ weights
    only_d1 = (p_d1 * (1 - p_d0)) @ weights
    return only_d0, only_d1


def response_probabilities(
    params: ProtocolParams,
    ch: ChannelSpec,
    filt: PhaseFilter
) -> Dict[str, float]:
    """Single-detector response probability of every label, averaged over random phases."""
    probabilities = {}
    for label in TABLE2_LABELS:
        only_d0, only_d1 = _response_grid(*label_intensities(params, label), ch, filt)
        probabilities[label] = float(np.mean(only_d0 + only_d1))
    return probabilities


def decoy_filter_response(
    params: ProtocolParams,
    ch: ChannelSpec,
    filt: PhaseFilter
) -> DecoyFilterResponse:
    """Accept and correct-click probabilities of decoy-window xx pairings."""
    only_d0, only_d1 = _response_grid(params.mu_x, params.mu_x, ch, filt)
    differences = filt.difference_grid()
    passing = filt.passes(differences, 0.0)
    expected = filt.expected_detector(differences, 0.0)
    response = only_d0 + only_d1
    correct = np.where(expected == 0, only_d0, only_d1)

    pass_fraction = float(np.mean(passing))
    fail_fraction = 1.0 - pass_fraction
    return DecoyFilterResponse(
        pass_fraction=pass_fraction,
        accept_given_pass=float(response[passing].mean()) if pass_fraction > 0 else 0.0,
        correct_given_pass=float(correct[passing].mean()) if pass_fraction > 0 else 0.0,
        response_given_fail=float(response[~passing].mean()) if fail_fraction > 0 else 0.0,
    )


def expected_tally(
    params: ProtocolParams,
    ch: ChannelSpec,
    filt: PhaseFilter,
    N: float,
    mapping: str = DEFAULT_INGESTION_MAP
) -> DetectionTally:
    """
    Expected detection statistics of a session of N pulse pairs.

    Args:
        params: Protocol parameters
        ch: Channel and detector description
        filt: Decoy-window phase filter
        N: Pulses sent by each user
        mapping: Label-to-pairing ingestion map

    Returns:
        DetectionTally with float counts
    """
    sent = sent_label_counts(params, N)
    probabilities = response_probabilities(params, ch, filt)
    detected = {label: sent[label] * probabilities[label] for label in TABLE2_LABELS}

    xx = decoy_filter_response(params, ch, filt)
    sent_accepted = sent[XX_LABEL] * xx.pass_fraction
    accepted = sent_accepted * xx.accept_given_pass
    correct = sent_accepted * xx.correct_given_pass

    tally = DetectionTally(
        total_pulses=N,
        counts=aggregate_labels(detected, mapping),
        xx_accepted=accepted,
        xx_correct=correct,
        xx_sent_accepted=sent_accepted,
        sent_pairs=aggregate_labels(sent, mapping),
        signal_counts={category: detected[label] for label, category in SIGNAL_LABELS.items()},
        labels=detected,
        ingestion_map=mapping,
    )
    logger.info(
        f"Expected tally: n_t={tally.raw_key_length:.4e}, QBER={tally.qber:.4f}, "
        f"xx accepted={accepted:.4e}"
    )
    return tally


def sampled_tally(
    params: ProtocolParams,
    ch: ChannelSpec,
    filt: PhaseFilter,
    N: int,
    seed: Optional[int] = None,
    mapping: str = DEFAULT_INGESTION_MAP
) -> DetectionTally:
    """
    Category-level Monte-Carlo tally.

    Sent label counts are multinomial, detections binomial given the sent
    counts; the decoy-window filter adds nested binomials. Statistically
    equivalent to per-pulse sampling and usable at any N.
    """
    rng = np.random.default_rng(seed)
    single = window_probabilities(params)
    probs = np.array([single[l[0] + l[2]] * single[l[1] + l[3]] for l in TABLE2_LABELS])
    sent_values = rng.multinomial(int(N), probs / probs.sum())
    sent = {label: int(v) for label, v in zip(TABLE2_LABELS, sent_values)}

    probabilities = response_probabilities(params, ch, filt)
    detected = {}
    for label in TABLE2_LABELS:
        if label == XX_LABEL:
            continue
        detected[label] = int(rng.binomial(sent[label], probabilities[label]))

    xx = decoy_filter_response(params, ch, filt)
    sent_accepted = int(rng.binomial(sent[XX_LABEL], xx.pass_fraction))
    accepted = int(rng.binomial(sent_accepted, xx.accept_given_pass))
    correct_share = xx.correct_given_pass / xx.accept_given_pass if xx.accept_given_pass > 0 else 0.0
    correct = int(rng.binomial(accepted, min(1.0, correct_share)))
    rejected = int(rng.binomial(sent[XX_LABEL] - sent_accepted, xx.response_given_fail))
    detected[XX_LABEL] = accepted + rejected

    return DetectionTally(
        total_pulses=N,
        counts=aggregate_labels(detected, mapping),
        xx_accepted=accepted,
        xx_correct=correct,
        xx_sent_accepted=sent_accepted,
        sent_pairs=aggregate_labels(sent, mapping),
        signal_counts={category: detected[label] for label, category in SIGNAL_LABELS.items()},
        labels={label: float(detected[label]) for label in TABLE2_LABELS},
        ingestion_map=mapping,
    )
