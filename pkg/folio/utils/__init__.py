"""工具包：日志、ID 与图像读写"""
