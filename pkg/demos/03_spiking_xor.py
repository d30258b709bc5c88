"""
A spiking XOR circuit
=====================

Runs the six-neuron motif with leaky integrate-and-fire units for the four
input patterns and prints a coarse raster.
"""

import numpy as np

from motifscan.spiking import NEURONS, classify, default_params, simulate, single_kick_peak

params = default_params()
print("weights:", dict(zip(("w_sensory", "w_exc", "w_exc_inh", "w_inh"), params.weights)))

bins = np.linspace(0, 500, 51)
for bits in [(0, 0), (0, 1), (1, 0), (1, 1)]:
    rec = simulate(params, bits, 500.0)
    print(f"\ninputs {bits} -> output {classify(rec)}")
    for name in NEURONS:
        hist, _ = np.histogram(rec.spikes[name], bins)
        row = "".join("|" if h else "." for h in hist)
        print(f"  {name:>4} {row} {len(rec.spikes[name]):3d}")

# With both inputs on, INH only fires when the two streams coincide, and
# then it silences the relays E2 and E4.

# One sensory spike on its own stays below threshold
w = 8.0
print("\nclosed-form peak for a single kick of", w, ":", round(single_kick_peak(w), 3), "mV above rest")
p = default_params(w_sensory=w, rate_hz=1.0)
rec = simulate(p, (1, 0), 200.0, record_voltage=True)
print("simulated peak:", round(rec.voltages[:, NEURONS.index("E1")].max() - p.v_rest, 3))
