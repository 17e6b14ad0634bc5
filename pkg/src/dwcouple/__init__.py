"""FE/BE coupling for the relaxed double-well transmission/Signorini problem."""
