# CO-RFT Desk - chunked offline RL fine-tuning
