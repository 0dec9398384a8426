from guidedicm import cli

cli.cli(obj={}, prog_name='guidedicm')
