"""Attosecond streaking of photoemission from a jellium metal surface.

Simulates streaked valence-band and 2p core-level photoelectron spectra of
Al(100) in Hartree atomic units: momentum-space wave-packet propagation of
the laser-dressed final states, transition amplitudes under a Gaussian XUV
probe, delay-scan spectrograms, and the relative valence/core emission
delay with and without screening of the IR field by the metal.
"""

__version__ = "0.1.0"
