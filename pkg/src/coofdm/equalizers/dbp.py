import math

from ..fiber import FiberParams, LinkPlan, SampledWaveform, ssfm_propagate


def dbp_equalize(w: SampledWaveform, p: FiberParams, plan: LinkPlan,
                 steps_per_span: int = 40) -> SampledWaveform:
    """Digital back-propagation through every span in reverse order.

    For each span the amplifier gain is divided out and the fiber is solved
    backward with ``steps_per_span`` equal steps.  Launch-power scaling is left
    in place; the one-tap estimate absorbs it.
    """
    if steps_per_span < 1:
        raise ValueError("steps_per_span must be >= 1")
    g = math.sqrt(plan.amplifier_for(p).gain)
    step = plan.span_length / steps_per_span
    out = w
    for _ in range(plan.n_spans):
        out = out.with_samples(out.samples / g)
        out = ssfm_propagate(out, p, plan.span_length, step, direction="backward", check_band=False)
    return out
