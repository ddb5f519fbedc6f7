"""Why the relative queue position piles up at multiples of one tenth.

Queues of random length get one uniformly placed cancellation each; no
position is preferred, yet the relative position y/n shows peaks at 0.1, 0.2,
..., 1.0 purely because the queue length n is a small integer. The two
largest point masses sit at 1 and 1/2, matching the harmonic-sum values.
"""
from lobcancel import QueueSimConfig, simulate_uniform_queues

config = QueueSimConfig(n_queues=1_000_000, max_length=100, seed=0)
result = simulate_uniform_queues(config)

h = lambda n: sum(1.0 / k for k in range(1, n + 1))
print(f"{config.n_queues} queues, lengths uniform on [1, {config.max_length}]")
print(f"P(Y=1)   = {result.prob_at(1.0):.5f}   analytic H(100)/100 = {h(100) / 100:.5f}")
print(f"P(Y=1/2) = {result.prob_at(0.5):.5f}   analytic H(50)/200  = {h(50) / 200:.5f}")

print("\nten largest point masses:")
for value, prob in result.top_masses(10):
    print(f"  Y = {value:<8.4f} P = {prob:.5f}")

print("\nbinned density (peaks survive 50-bin smoothing at 0.5 and 1.0):")
pdf = result.pdf
for center, dens in zip(pdf.centers(), pdf.density):
    print(f"  {center:4.2f} {'#' * int(round(dens * 25))}")
