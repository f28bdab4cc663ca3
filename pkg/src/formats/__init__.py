"""JSON record formats, tally files and report rendering."""
