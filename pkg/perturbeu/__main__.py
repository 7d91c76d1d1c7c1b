from perturbeu.cli import main

main()
