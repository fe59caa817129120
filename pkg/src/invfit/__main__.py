from invfit.cli import main

main()
