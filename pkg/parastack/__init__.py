"""
# Parastack

Parastack simulates photon pairs generated by spontaneous parametric
down-conversion in random one-dimensional layered structures, and the
statistics of those structures.

Random stacks of LiNbO₃ and SiO₂ layers are built from quarter-wave
elementary slots with jittered boundaries. Their transmission peaks
(localized modes) enhance the down-converted fields and shape the
two-photon amplitude, which is then analysed: Schmidt decomposition,
temporal amplitude, photon fluxes, Hong-Ou-Mandel and Franson
interferometers.


## Quickstart

Install with `pip install parastack`

You can then run:

``` python
from parastack import (
    GeneratorParams, PumpConfig, generate_random_stack, scan_peaks,
    schmidt_decompose, two_photon_amplitude, wavelength_to_omega,
)

stack = generate_random_stack(GeneratorParams(n_elem=250, seed=7))
band = (wavelength_to_omega(1.1), wavelength_to_omega(0.9))
peak = max(scan_peaks(stack, band), key=lambda p: p.t_max)
pump = PumpConfig(omega_p0=2 * peak.omega_c, duration_fwhm=250)
tpa = two_photon_amplitude(stack, pump, normalization="paper")
schmidt = schmidt_decompose(tpa)
print(schmidt.entropy(), schmidt.cooperativity())  # bits, and K >= 1
```

See `parastack.stack` and `parastack.transfer` for structures and
their optics, `parastack.amplitude` for the two-photon amplitude,
`parastack.ensemble` for Monte Carlo campaigns and `parastack.cli`
for the command line.
"""

from .amplitude import *
from .ensemble import *
from .figures import *
from .interference import *
from .material import *
from .peaks import *
from .pod import *
from .schema import *
from .schmidt import *
from .stack import *
from .superpose import *
from .temporal import *
from .transfer import *
from .utils import (
    DomainError,
    NumericalError,
    ParastackError,
    ValidationError,
    derive_seed,
    omega_to_wavelength,
    settings,
    wavelength_to_omega,
)

__version__ = "0.1.0"
