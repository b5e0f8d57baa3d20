from icdkit.cli import main

main()
