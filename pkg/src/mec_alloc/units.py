"""Canonical unit system: bits, bits/second, Hz, cycles/second.

Every quantity inside the library is stored in canonical units; these
constants are the only place where the Mb/GB/GHz conventions of the
evaluation setup are converted.
"""

MB = 1e6          # megabit -> bits
GB = 8e9          # gigabyte -> bits
GHZ = 1e9         # gigahertz -> cycles/second
MBPS = 1e6        # megabit/second -> bits/second
