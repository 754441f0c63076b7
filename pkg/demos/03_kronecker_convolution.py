# Convolving with Kronecker factors without forming the full weight
#
# Stage one convolves with B on a dense grid, stage two convolves that
# result with A at a dilation equal to B's kernel size.

import numpy as np

from gkpd import ConvFactorPair, ConvGeometry, MacCounter, conv2d_direct, kron, kron_conv_forward

rng = np.random.default_rng(2)
a = rng.standard_normal((8, 4, 1, 1))
b = rng.standard_normal((8, 8, 3, 3))
x = rng.standard_normal((32, 20, 20))
g = ConvGeometry(stride=1, padding=1)

direct, factored = MacCounter(), MacCounter()
y_ref = conv2d_direct(kron(a, b), x, g, direct)
y = kron_conv_forward(ConvFactorPair(a, b), x, g, factored)

print("output shape:", y.shape)
print("max |difference|:", np.max(np.abs(y - y_ref)))
print("MACs direct:   ", direct.total)
print("MACs factored: ", factored.total, dict(factored.by_stage))
print("speed-up in MACs: %.2fx" % (direct.total / factored.total))

# Stride and padding carry over unchanged
g2 = ConvGeometry(stride=(2, 3), padding=(2, 0))
diff = np.max(np.abs(kron_conv_forward(ConvFactorPair(a, b), x, g2) - conv2d_direct(kron(a, b), x, g2)))
print("strided max |difference|:", diff)
