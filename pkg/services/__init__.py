# Services package for the Casimir-Polder cone and wedge calculator
