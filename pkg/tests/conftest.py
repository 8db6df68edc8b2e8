"""Shared fixtures: one cheap synthetic utterance per syllable class."""

import numpy as np
import pytest

import glotfit as g

FS = 16000.0


@pytest.fixture(scope="session")
def spec():
    return g.CorpusSpec(seed=0)


@pytest.fixture(scope="session")
def mid_lf():
    return g.LFParams(t0_s=0.01, tp=0.435, te=0.60, ta=0.055)


@pytest.fixture(scope="session")
def vowel_utt(spec):
    """One /a/ utterance at an off-grid F0, with its ground truth."""
    speech, truth = g.synth_utterance(g.syllable_spec("a"), 135.0,
                                      g.fixed_lf(spec), spec)
    return speech, truth


@pytest.fixture(scope="session")
def nasal_utt(spec):
    """One /m/ utterance (carries anti-resonances)."""
    speech, truth = g.synth_utterance(g.syllable_spec("m"), 135.0,
                                      g.fixed_lf(spec), spec)
    return speech, truth
