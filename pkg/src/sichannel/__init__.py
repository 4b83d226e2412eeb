"""Signal-integrity channel toolkit for 56 Gb/s NRZ PCB interconnect studies."""

