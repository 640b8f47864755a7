"""Twin-point tetrahedral meshing of surfaces with close-contact regions."""
