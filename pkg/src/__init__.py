# QHetSim Package
