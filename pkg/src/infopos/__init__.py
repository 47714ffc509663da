"""Fault identification across information positions for CPS metric traces."""
