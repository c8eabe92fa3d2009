"""Small X rotations interleaved with random Z kicks.

With 10 degree rotations and 20 degree kicks the averaged channel already sits
right at the edge: the Z bit survives with probability just above one half.
The slow-rotation case below shows the contrast more clearly. Averaging each
kick into a dephasing channel keeps most of the Z bit, while smoothing the
kicks over a window wider than the rotation timescale mixes the rotated
noise and drives the qubit to the maximally mixed state.

    python demos/alternating_rotations.py
"""
from noisyqc import evolve as ev
from noisyqc import qmath as q


def report(label, run):
    dist = q.trace_distance(run.result.final, q.maximally_mixed(1))
    print(f"{label:<34} bit survival {run.bit_survival_fidelity():.4f}   distance to I/2 {dist:.3e}")


print("eps=10 deg, delta=20 deg, 100 pairs")
report("averaged kicks", ev.alternating_sequence(10, 20, 100))
report("one sampled kick sequence", ev.alternating_sequence(10, 20, 100, "unitary_sample", seed=7))
for width in (0.05, 0.25):
    kernel = ev.SmoothingKernel.raised_cosine(width)
    report(f"smoothed, kernel width {width}", ev.alternating_sequence(10, 20, 100, "smoothed", kernel=kernel))

print("\nslow rotation, strong kicks: eps=0.5 deg, delta=40 deg, 2000 pairs")
report("averaged kicks", ev.alternating_sequence(0.5, 40, 2000))
report("smoothed, kernel width 0.25",
       ev.alternating_sequence(0.5, 40, 2000, "smoothed", kernel=ev.SmoothingKernel.raised_cosine(0.25)))
